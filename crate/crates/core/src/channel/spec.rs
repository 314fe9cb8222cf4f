use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

use super::kraus::KrausChannel;
use super::ptm::PauliTransferMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    AmpDamp,
    Depolarizing,
    AmpThenDep,
    DepThenAmp,
    GeneralPtm,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::AmpDamp => "amp_damp",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::AmpThenDep => "amp_then_dep",
            ChannelKind::DepThenAmp => "dep_then_amp",
            ChannelKind::GeneralPtm => "general_ptm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown channel kind `{s}`")))
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Order of the two factors in the standard noise model.
///
/// `AmpThenDep` is the composition N_amp ∘ N_dep: depolarizing acts on the
/// state first and amplitude damping last. `DepThenAmp` is N_dep ∘ N_amp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    AmpThenDep,
    DepThenAmp,
}

/// Amplitude damping with strength `q` composed with depolarizing noise `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardNoise {
    pub order: Order,
    pub p: f64,
    pub q: f64,
}

impl StandardNoise {
    pub fn new(order: Order, p: f64, q: f64) -> Result<Self> {
        check_unit("p", p)?;
        check_unit("q", q)?;
        Ok(Self { order, p, q })
    }

    /// Weight of the identity in N^dagger(Z) = r I + (1-q)(1-p) Z.
    pub fn r(&self) -> f64 {
        r_value(self.order, self.p, self.q).expect("validated")
    }

    pub fn channel(&self) -> KrausChannel {
        let amp = KrausChannel::amplitude_damping(self.q).expect("validated");
        let dep = KrausChannel::depolarizing(self.p).expect("validated");
        match self.order {
            Order::AmpThenDep => amp.compose(&dep),
            Order::DepThenAmp => dep.compose(&amp),
        }
        .expect("same arity")
    }

    pub fn ptm(&self) -> PauliTransferMap {
        self.channel().ptm().expect("single qubit")
    }

    /// S-coefficient of the twirled pair map applied to the identity, halved.
    pub fn pair_a(&self) -> f64 {
        let r = self.r();
        r * r / 3.0
    }

    /// I-coefficient of the twirled pair map applied to the swap.
    pub fn pair_b(&self) -> f64 {
        let r = self.r();
        let (p, q) = (self.p, self.q);
        0.5 - r * r / 6.0 - (1.0 - p).powi(2) * (1.0 - q) * (3.0 - q) / 6.0
    }

    /// c = 1 - (1-p)^2 (1-q)(1-q/3), equal to a + 2b.
    pub fn pair_c(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        1.0 - (1.0 - p).powi(2) * (1.0 - q) * (1.0 - q / 3.0)
    }
}

pub fn r_value(order: Order, p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(match order {
        Order::AmpThenDep => q,
        Order::DepThenAmp => q * (1.0 - p),
    })
}

/// Serialized channel description: `{"kind", "q", "p", "t"?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<[[f64; 4]; 4]>,
}

/// Result of building a channel. General transfer matrices that fail the
/// Choi test are returned as maps with the verdict attached, not rejected.
#[derive(Clone, Debug)]
pub enum MadeChannel {
    Kraus(KrausChannel),
    Map(GeneralMap),
}

#[derive(Clone, Debug)]
pub struct GeneralMap {
    pub ptm: PauliTransferMap,
    pub min_choi_eigenvalue: f64,
    pub is_cptp: bool,
}

impl ChannelSpec {
    pub fn standard(kind: ChannelKind, q: f64, p: f64) -> Self {
        Self { kind, q, p, t: None }
    }

    pub fn general(t: [[f64; 4]; 4]) -> Self {
        Self {
            kind: ChannelKind::GeneralPtm,
            q: 0.0,
            p: 0.0,
            t: Some(t),
        }
    }

    /// The standard-family view: amp_damp is p = 0, depolarizing is q = 0.
    pub fn as_standard(&self) -> Result<Option<StandardNoise>> {
        let noise = match self.kind {
            ChannelKind::AmpDamp => StandardNoise::new(Order::AmpThenDep, 0.0, self.q)?,
            ChannelKind::Depolarizing => StandardNoise::new(Order::AmpThenDep, self.p, 0.0)?,
            ChannelKind::AmpThenDep => StandardNoise::new(Order::AmpThenDep, self.p, self.q)?,
            ChannelKind::DepThenAmp => StandardNoise::new(Order::DepThenAmp, self.p, self.q)?,
            ChannelKind::GeneralPtm => return Ok(None),
        };
        Ok(Some(noise))
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ChannelKind::GeneralPtm => {
                let t = self.t.ok_or_else(|| Error::Config("general_ptm requires `t`".into()))?;
                PauliTransferMap::new(t)?;
            }
            _ => {
                self.as_standard()?;
            }
        }
        Ok(())
    }

    pub fn make(&self) -> Result<MadeChannel> {
        if let Some(noise) = self.as_standard()? {
            return Ok(MadeChannel::Kraus(noise.channel()));
        }
        let t = self.t.ok_or_else(|| Error::Config("general_ptm requires `t`".into()))?;
        let ptm = PauliTransferMap::new(t)?;
        let min_choi_eigenvalue = ptm.min_choi_eigenvalue();
        let is_cptp = min_choi_eigenvalue >= -super::kraus::CPTP_TOL;
        if is_cptp {
            Ok(MadeChannel::Kraus(ptm.to_kraus()?))
        } else {
            Ok(MadeChannel::Map(GeneralMap {
                ptm,
                min_choi_eigenvalue,
                is_cptp,
            }))
        }
    }

    /// Channel for simulation; non-CPTP maps are an error here.
    pub fn channel(&self) -> Result<KrausChannel> {
        match self.make()? {
            MadeChannel::Kraus(ch) => Ok(ch),
            MadeChannel::Map(map) => Err(Error::CptpViolation {
                min_eigenvalue: map.min_choi_eigenvalue,
            }),
        }
    }

    /// Transfer matrix without a positivity requirement.
    pub fn ptm(&self) -> Result<PauliTransferMap> {
        match self.make()? {
            MadeChannel::Kraus(ch) => ch.ptm(),
            MadeChannel::Map(map) => Ok(map.ptm),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, max_abs_diff, pauli};

    #[test]
    fn adjoint_z_has_identity_weight_r() {
        for order in [Order::AmpThenDep, Order::DepThenAmp] {
            let noise = StandardNoise::new(order, 0.15, 0.35).unwrap();
            let out = noise.channel().apply_adjoint(&pauli(3)).unwrap();
            let expected = identity(2) * c(noise.r(), 0.0) + pauli(3) * c((1.0 - 0.35) * (1.0 - 0.15), 0.0);
            assert!(max_abs_diff(&out, &expected) < 1e-14, "{order:?}");
        }
    }

    #[test]
    fn kind_round_trip() {
        for kind in [
            ChannelKind::AmpDamp,
            ChannelKind::Depolarizing,
            ChannelKind::AmpThenDep,
            ChannelKind::DepThenAmp,
            ChannelKind::GeneralPtm,
        ] {
            assert_eq!(ChannelKind::parse(kind.as_str()).unwrap(), kind);
        }
        assert!(ChannelKind::parse("bitflip").is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec: ChannelSpec = serde_json::from_str(r#"{"kind":"amp_then_dep","q":0.2,"p":0.1}"#).unwrap();
        assert_eq!(spec.kind, ChannelKind::AmpThenDep);
        assert!(spec.t.is_none());
        let text = serde_json::to_string(&spec).unwrap();
        assert!(!text.contains("\"t\""));
    }

    #[test]
    fn general_non_cp_returns_map() {
        let mut t = *PauliTransferMap::identity().matrix();
        t[2][2] = -1.0;
        match ChannelSpec::general(t).make().unwrap() {
            MadeChannel::Map(map) => assert!(!map.is_cptp && map.min_choi_eigenvalue < -0.5),
            MadeChannel::Kraus(_) => panic!("transpose accepted as a channel"),
        }
    }

    #[test]
    fn pair_c_is_a_plus_2b() {
        let noise = StandardNoise::new(Order::DepThenAmp, 0.3, 0.6).unwrap();
        assert!((noise.pair_a() + 2.0 * noise.pair_b() - noise.pair_c()).abs() < 1e-15);
    }
}
