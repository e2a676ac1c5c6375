//! Experimental operating points and reference results.
//!
//! Excess noise is stored as measured from received data. Measured noise sits
//! at the detector by default and is converted to channel input via
//! xi_in = xi_meas / (eta T).

use serde::{Deserialize, Serialize};

use crate::qcore::{db_to_transmittance, DetectorParams, Link, NoiseModel};
use crate::{Error, Result};

/// Which protocol a preset is being instantiated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    QdsB,
    QdsF,
    QssB,
    QkdF,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::QdsB, Protocol::QdsF, Protocol::QssB, Protocol::QkdF];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::QdsB => "qds-b",
            Protocol::QdsF => "qds-f",
            Protocol::QssB => "qss-b",
            Protocol::QkdF => "qkd-f",
        }
    }

    /// Detector efficiency used for this protocol's analysis.
    pub fn default_eta(self) -> f64 {
        match self {
            Protocol::QdsB | Protocol::QdsF => 0.5,
            Protocol::QssB | Protocol::QkdF => 1.0,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown protocol '{s}'")))
    }
}

/// Where the quoted excess noise is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XiReference {
    /// Already channel-input.
    Channel,
    /// Measured at the detector output.
    #[default]
    Detector,
}

impl std::str::FromStr for XiReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel" => Ok(Self::Channel),
            "detector" => Ok(Self::Detector),
            other => Err(Error::domain(format!("unknown xi reference '{other}'"))),
        }
    }
}

/// Channel-input excess noise for a quoted value.
pub fn channel_xi(xi: f64, reference: XiReference, eta: f64, transmittance: f64) -> f64 {
    match reference {
        XiReference::Channel => xi,
        XiReference::Detector => xi / (eta * transmittance),
    }
}

/// Published results at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub qds_b_l: Option<f64>,
    pub qds_f_l: f64,
    pub qss_two_kappa: f64,
    pub qkd_kappa: f64,
}

/// One experimental run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPreset {
    pub name: &'static str,
    pub distance_km: f64,
    pub loss_db: f64,
    pub amplitude: f64,
    pub xi_measured: f64,
    pub reference: ReferenceRow,
}

pub const RUNS: [RunPreset; 4] = [
    RunPreset {
        name: "run1",
        distance_km: 2.0,
        loss_db: 0.65,
        amplitude: 0.64,
        xi_measured: 0.027,
        reference: ReferenceRow {
            qds_b_l: Some(5.70e6),
            qds_f_l: 4.79e4,
            qss_two_kappa: 0.3726,
            qkd_kappa: 0.3479,
        },
    },
    RunPreset {
        name: "run2",
        distance_km: 20.0,
        loss_db: 4.75,
        amplitude: 0.67,
        xi_measured: 0.019,
        reference: ReferenceRow {
            qds_b_l: None,
            qds_f_l: 2.26e9,
            qss_two_kappa: 0.1058,
            qkd_kappa: 0.1024,
        },
    },
    RunPreset {
        name: "run3",
        distance_km: 20.0,
        loss_db: 4.75,
        amplitude: 0.55,
        xi_measured: 0.021,
        reference: ReferenceRow {
            qds_b_l: None,
            qds_f_l: 1.37e8,
            qss_two_kappa: 0.0858,
            qkd_kappa: 0.0840,
        },
    },
    RunPreset {
        name: "run4",
        distance_km: 20.0,
        loss_db: 4.75,
        amplitude: 0.64,
        xi_measured: 0.017,
        reference: ReferenceRow {
            qds_b_l: None,
            qds_f_l: 2.08e8,
            qss_two_kappa: 0.1004,
            qkd_kappa: 0.0976,
        },
    },
];

pub fn run(name: &str) -> Result<&'static RunPreset> {
    RUNS.iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::domain(format!("unknown preset '{name}' (expected run1..run4)")))
}

impl RunPreset {
    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.loss_db)
    }

    /// Link for `protocol` with its default detector and the given noise reference.
    pub fn link(&self, protocol: Protocol, reference: XiReference) -> Result<Link> {
        self.link_with(DetectorParams::new(protocol.default_eta(), 0.0)?, reference)
    }

    pub fn link_with(&self, det: DetectorParams, reference: XiReference) -> Result<Link> {
        let t = self.transmittance();
        let xi = channel_xi(self.xi_measured, reference, det.eta, t);
        Ok(Link::new(NoiseModel::new(t, xi)?, det))
    }
}
