use std::fmt;
use std::str::FromStr;

use crate::signals::PhaseFn;
use crate::spectral::{HodgePart, LaplacianVariant};
use crate::{Error, Result};

/// Node-to-edge lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lift {
    Prod,
    Phase(PhaseFn),
}

impl fmt::Display for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lift::Prod => f.write_str("prod"),
            Lift::Phase(p) => p.fmt(f),
        }
    }
}

impl FromStr for Lift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prod" | "product" => Ok(Lift::Prod),
            other => Ok(Lift::Phase(other.parse().map_err(|_| {
                Error::invalid(format!("unknown lift '{s}' (expected prod, sin or cos)"))
            })?)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GspPart {
    Coupled,
    Decoupled,
    /// Structural-decoupling index; a per-node summary with no time course.
    Sdi,
}

/// One method column of the decoding comparison.
///
/// Names: `raw`, `gsp-coupled`, `gsp-decoupled`, `gsp-sdi` and
/// `tsp-<down|full>-<prod|sin|cos>-<harm|grad|curl|none>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Raw,
    Gsp(GspPart),
    Tsp {
        laplacian: LaplacianVariant,
        lift: Lift,
        part: Option<HodgePart>,
    },
}

impl Variant {
    pub fn tsp(laplacian: LaplacianVariant, lift: Lift, part: Option<HodgePart>) -> Result<Self> {
        if laplacian == LaplacianVariant::Up {
            return Err(Error::invalid(
                "TSP variants use the down or full Laplacian",
            ));
        }
        if laplacian == LaplacianVariant::Down && part == Some(HodgePart::Curl) {
            return Err(Error::invalid(
                "curl is undefined for the down Laplacian (no triangles)",
            ));
        }
        Ok(Variant::Tsp {
            laplacian,
            lift,
            part,
        })
    }

    pub fn is_tsp(&self) -> bool {
        matches!(self, Variant::Tsp { .. })
    }

    pub fn is_gsp(&self) -> bool {
        matches!(self, Variant::Gsp(_))
    }

    /// Every TSP combination plus the GSP variants and the raw baseline.
    pub fn grid() -> Vec<Variant> {
        let mut out = vec![
            Variant::Raw,
            Variant::Gsp(GspPart::Coupled),
            Variant::Gsp(GspPart::Decoupled),
            Variant::Gsp(GspPart::Sdi),
        ];
        for laplacian in [LaplacianVariant::Down, LaplacianVariant::Full] {
            for lift in [
                Lift::Prod,
                Lift::Phase(PhaseFn::Sin),
                Lift::Phase(PhaseFn::Cos),
            ] {
                for part in [
                    Some(HodgePart::Harm),
                    Some(HodgePart::Grad),
                    Some(HodgePart::Curl),
                ] {
                    if let Ok(v) = Variant::tsp(laplacian, lift, part) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Raw => f.write_str("raw"),
            Variant::Gsp(GspPart::Coupled) => f.write_str("gsp-coupled"),
            Variant::Gsp(GspPart::Decoupled) => f.write_str("gsp-decoupled"),
            Variant::Gsp(GspPart::Sdi) => f.write_str("gsp-sdi"),
            Variant::Tsp {
                laplacian,
                lift,
                part,
            } => {
                let part = part.map_or("none".to_string(), |p| p.to_string());
                write!(f, "tsp-{laplacian}-{lift}-{part}")
            }
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "raw" => return Ok(Variant::Raw),
            "gsp-coupled" => return Ok(Variant::Gsp(GspPart::Coupled)),
            "gsp-decoupled" => return Ok(Variant::Gsp(GspPart::Decoupled)),
            "gsp-sdi" => return Ok(Variant::Gsp(GspPart::Sdi)),
            _ => {}
        }
        let parts: Vec<&str> = lower.split('-').collect();
        if parts.len() != 4 || parts[0] != "tsp" {
            return Err(Error::invalid(format!("unknown variant '{s}'")));
        }
        let part = match parts[3] {
            "none" => None,
            p => Some(p.parse()?),
        };
        Variant::tsp(parts[1].parse()?, parts[2].parse()?, part)
    }
}
