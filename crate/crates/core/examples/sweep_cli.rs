//! Drives the command-line front end in-process: a sweep over alpha and a
//! sweep over the arrival-rate scale, as CSV.

use v2x_delivery::cli::run_command;

fn main() -> v2x_delivery::Result<()> {
    let mut out = std::io::stdout();
    run_command(
        [
            "v2x-delivery",
            "sweep",
            "--variable",
            "alpha",
            "--from",
            "0",
            "--to",
            "1",
            "--steps",
            "5",
        ],
        &mut out,
    )?;
    run_command(
        [
            "v2x-delivery",
            "sweep",
            "--variable",
            "lambda_scale",
            "--grid",
            "0.5,1,2",
        ],
        &mut out,
    )?;
    run_command(
        [
            "v2x-delivery",
            "sweep",
            "--variable",
            "scheme_beams",
            "--scheme",
            "SD",
            "--grid",
            "1,2,4",
        ],
        &mut out,
    )?;
    Ok(())
}
