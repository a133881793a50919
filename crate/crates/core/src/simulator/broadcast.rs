//! Discovery trial duration `Δt` per broadcast scheme and beam count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    /// Single-beam exhaustive scan; only defined for one beam.
    Td,
    Fd,
    Cd,
    Sd,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Td, Scheme::Fd, Scheme::Cd, Scheme::Sd];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Td => "TD",
            Scheme::Fd => "FD",
            Scheme::Cd => "CD",
            Scheme::Sd => "SD",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TD" => Ok(Scheme::Td),
            "FD" => Ok(Scheme::Fd),
            "CD" => Ok(Scheme::Cd),
            "SD" => Ok(Scheme::Sd),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

/// `Δt(scheme, M) = base · (1 + slope · M)`. The default numbers are
/// synthetic; they only encode the ordering TD < SD < FD = CD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastTable {
    /// Seconds.
    pub base: f64,
    pub td_slope: f64,
    pub fd_slope: f64,
    pub cd_slope: f64,
    pub sd_slope: f64,
}

impl Default for BroadcastTable {
    fn default() -> Self {
        Self {
            base: 0.1,
            td_slope: 0.0,
            fd_slope: 0.1,
            cd_slope: 0.1,
            sd_slope: 0.05,
        }
    }
}

impl BroadcastTable {
    fn slope(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Td => self.td_slope,
            Scheme::Fd => self.fd_slope,
            Scheme::Cd => self.cd_slope,
            Scheme::Sd => self.sd_slope,
        }
    }

    /// Ordering problems of the table at `beams` beams, one line each.
    /// TD is compared at its only valid beam count.
    pub fn validate(&self, beams: u32) -> Vec<String> {
        let mut warnings = Vec::new();
        let at = |s: Scheme| {
            let m = if s == Scheme::Td { 1 } else { beams.max(1) };
            self.base * (1.0 + self.slope(s) * m as f64)
        };
        let (td, fd, cd, sd) = (at(Scheme::Td), at(Scheme::Fd), at(Scheme::Cd), at(Scheme::Sd));
        if [fd, cd, sd].iter().any(|&x| x < td) {
            warnings.push(format!("TD ({td}) is not the smallest trial duration"));
        }
        if fd != cd {
            warnings.push(format!("FD ({fd}) and CD ({cd}) differ at M = {beams}"));
        }
        if !(td <= sd && sd <= fd.min(cd)) {
            warnings.push(format!(
                "SD ({sd}) does not lie between TD ({td}) and FD/CD ({fd}, {cd})"
            ));
        }
        warnings
    }
}

pub fn delta_t_for_scheme(scheme: Scheme, beams: u32, table: &BroadcastTable) -> Result<f64> {
    if beams == 0 || (scheme == Scheme::Td && beams != 1) {
        return Err(Error::InvalidBeams {
            scheme: scheme.to_string(),
            beams,
        });
    }
    let dt = table.base * (1.0 + table.slope(scheme) * beams as f64);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "table gives a non-positive trial duration {dt} for {scheme} at M = {beams}"
        )));
    }
    Ok(dt)
}
