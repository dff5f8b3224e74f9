//! Built-in two-party functionalities, each a circuit paired with a plain
//! integer reference implementation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, CircuitError, NodeId};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuncError {
    #[error("unknown functionality {0:?}")]
    Unknown(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("{name}: circuit gives {circuit} but reference gives {reference} at chosen={chosen}, target={target}")]
    Disagreement {
        name: String,
        chosen: BigUint,
        target: BigUint,
        circuit: BigUint,
        reference: BigUint,
    },
    #[error("functionality {0:?} already registered")]
    Duplicate(String),
}

pub type EvalFn = Arc<dyn Fn(&BigUint, &BigUint) -> BigUint + Send + Sync>;

/// A circuit together with an independent concrete evaluator.
#[derive(Clone)]
pub struct Functionality {
    pub name: String,
    pub params: BTreeMap<String, u64>,
    circuit: Arc<Circuit>,
    eval: EvalFn,
}

impl fmt::Debug for Functionality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functionality")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("chosen_width", &self.chosen_width())
            .field("target_width", &self.target_width())
            .field("output_width", &self.output_width())
            .finish()
    }
}

impl Functionality {
    pub fn new(
        name: impl Into<String>,
        params: BTreeMap<String, u64>,
        circuit: Circuit,
        eval: impl Fn(&BigUint, &BigUint) -> BigUint + Send + Sync + 'static,
    ) -> Self {
        Functionality {
            name: name.into(),
            params,
            circuit: Arc::new(circuit),
            eval: Arc::new(eval),
        }
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn chosen_width(&self) -> u32 {
        self.circuit.chosen_width().bits()
    }

    pub fn target_width(&self) -> u32 {
        self.circuit.target_width().bits()
    }

    pub fn output_width(&self) -> u32 {
        self.circuit.output_width().bits()
    }

    /// The reference (non-circuit) evaluation.
    pub fn eval(&self, chosen: &BigUint, target: &BigUint) -> BigUint {
        (self.eval)(chosen, target)
    }

    /// Compares circuit and reference: exhaustively when both inputs are at
    /// most 8 bits wide, otherwise on `samples` seeded random pairs.
    pub fn check_agreement(&self, samples: usize, seed: u64) -> Result<(), FuncError> {
        let (cw, tw) = (self.chosen_width(), self.target_width());
        let check = |c: BigUint, t: BigUint| -> Result<(), FuncError> {
            let got = self.circuit.evaluate(&c, &t)?;
            let want = self.eval(&c, &t);
            if got != want {
                return Err(FuncError::Disagreement {
                    name: self.name.clone(),
                    chosen: c,
                    target: t,
                    circuit: got,
                    reference: want,
                });
            }
            Ok(())
        };
        if cw <= 8 && tw <= 8 {
            for c in 0u32..1 << cw {
                for t in 0u32..1 << tw {
                    check(c.into(), t.into())?;
                }
            }
        } else {
            let mut r = rng::stream(seed, "agreement", 0);
            for _ in 0..samples {
                check(random_bits(&mut r, cw), random_bits(&mut r, tw))?;
            }
        }
        Ok(())
    }
}

pub fn random_bits(rng: &mut impl Rng, width: u32) -> BigUint {
    let mut v = BigUint::zero();
    for i in 0..width {
        if rng.gen::<bool>() {
            v.set_bit(i as u64, true);
        }
    }
    v
}

fn params(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), FuncError> {
    if cond {
        Ok(())
    } else {
        Err(FuncError::BadParam(msg.into()))
    }
}

/// Output 1 iff chosen > target.
pub fn millionaires(width: u32) -> Result<Functionality, FuncError> {
    require(width >= 1, "width must be at least 1")?;
    let mut b = CircuitBuilder::new();
    let c = b.chosen(width)?;
    let t = b.target(width)?;
    let o = b.ugt(c, t)?;
    Ok(Functionality::new(
        "millionaires",
        params(&[("width", width as u64)]),
        b.finish(o)?,
        |c, t| BigUint::from((c > t) as u8),
    ))
}

/// Chosen input packs a `dim`x`dim` bit matrix M (high bits, row j at bits
/// `dim + j*dim ..`) above a `dim`-bit vector c. Output 1 iff M·c = M·t over
/// GF(2).
pub fn dual_execution_affine(dim: u32) -> Result<Functionality, FuncError> {
    require(dim >= 2, "dim must be at least 2")?;
    let d = dim;
    let mut b = CircuitBuilder::new();
    let chosen = b.chosen(d * d + d)?;
    let t = b.target(d)?;
    let bit = |b: &mut CircuitBuilder, x: NodeId, i: u32| b.extract(x, i, i);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..d {
        let mut cs = Vec::new();
        let mut ts = Vec::new();
        for i in 0..d {
            let m = bit(&mut b, chosen, d + j * d + i)?;
            let ci = bit(&mut b, chosen, i)?;
            let ti = bit(&mut b, t, i)?;
            cs.push(b.and(m, ci)?);
            ts.push(b.and(m, ti)?);
        }
        lhs.push(b.xor_all(&cs)?);
        rhs.push(b.xor_all(&ts)?);
    }
    lhs.reverse();
    rhs.reverse();
    let l = b.concat(&lhs)?;
    let r = b.concat(&rhs)?;
    let o = b.eq(l, r)?;
    let eval = move |c: &BigUint, t: &BigUint| {
        let ok = (0..d).all(|j| {
            let mut x = false;
            let mut y = false;
            for i in 0..d {
                let m = c.bit((d + j * d + i) as u64);
                x ^= m & c.bit(i as u64);
                y ^= m & t.bit(i as u64);
            }
            x == y
        });
        BigUint::from(ok as u8)
    };
    Ok(Functionality::new(
        "dual_execution",
        params(&[("dim", dim as u64)]),
        b.finish(o)?,
        eval,
    ))
}

/// floor((c + t) / 2) in `width + 1` bits, truncated back to `width`.
fn mean_node(b: &mut CircuitBuilder, c: NodeId, t: NodeId, width: u32) -> Result<NodeId, CircuitError> {
    let cw = b.zext(c, width + 1)?;
    let tw = b.zext(t, width + 1)?;
    let sum = b.add(cw, tw)?;
    b.extract(sum, width, 1)
}

pub fn mean_average(width: u32) -> Result<Functionality, FuncError> {
    require(width >= 2, "width must be at least 2")?;
    let mut b = CircuitBuilder::new();
    let c = b.chosen(width)?;
    let t = b.target(width)?;
    let o = mean_node(&mut b, c, t, width)?;
    Ok(Functionality::new(
        "mean_average",
        params(&[("width", width as u64)]),
        b.finish(o)?,
        |c, t| (c + t) >> 1u32,
    ))
}

/// How many buckets of size `bucket` separate chosen from the updated mean.
pub fn bucketed_mean(width: u32, bucket: u64) -> Result<Functionality, FuncError> {
    require(width >= 2, "width must be at least 2")?;
    require(bucket >= 1 && bucket.is_power_of_two(), "bucket must be a power of two")?;
    let shift = bucket.trailing_zeros();
    require(shift < width, "bucket must be smaller than 2^width")?;
    let mut b = CircuitBuilder::new();
    let c = b.chosen(width)?;
    let t = b.target(width)?;
    let m = mean_node(&mut b, c, t, width)?;
    let below = b.ult(c, m)?;
    let up = b.sub(m, c)?;
    let down = b.sub(c, m)?;
    let dist = b.ite(below, up, down)?;
    let o = b.extract(dist, width - 1, shift)?;
    Ok(Functionality::new(
        "bucketed_mean",
        params(&[("width", width as u64), ("bucket", bucket)]),
        b.finish(o)?,
        move |c, t| {
            let m = (c + t) >> 1u32;
            let dist = if c > &m { c - &m } else { &m - c };
            dist >> shift
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WageVariant {
    /// chosen < floor((chosen + target) / 2), with a division node
    StandardDiv,
    /// 2·chosen < chosen + target
    CircuitDiv,
}

pub fn wage(width: u32, variant: WageVariant) -> Result<Functionality, FuncError> {
    require(width >= 4, "width must be at least 4")?;
    let mut b = CircuitBuilder::new();
    let c = b.chosen(width)?;
    let t = b.target(width)?;
    let cw = b.zext(c, width + 1)?;
    let tw = b.zext(t, width + 1)?;
    let sum = b.add(cw, tw)?;
    let (o, name, div) = match variant {
        WageVariant::StandardDiv => {
            let two = b.constant(2u32, width + 1)?;
            let mean = b.udiv(sum, two)?;
            (b.ult(cw, mean)?, "wage_standard", 0)
        }
        WageVariant::CircuitDiv => {
            let zero = b.constant(0u32, 1)?;
            let doubled = b.concat(&[c, zero])?;
            (b.ult(doubled, sum)?, "wage_circuit", 1)
        }
    };
    let eval = move |c: &BigUint, t: &BigUint| {
        let out = match variant {
            WageVariant::StandardDiv => *c < (c + t) >> 1u32,
            WageVariant::CircuitDiv => c * 2u32 < c + t,
        };
        BigUint::from(out as u8)
    };
    Ok(Functionality::new(
        name,
        params(&[("width", width as u64), ("div", div)]),
        b.finish(o)?,
        eval,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AuctionConfig {
    pub num_prices: u32,
    pub unit_bits: u32,
    pub honest_buyers: u32,
    pub honest_sellers: u32,
    pub adv_buyers: u32,
    pub adv_sellers: u32,
}

impl AuctionConfig {
    fn output_width(&self) -> u32 {
        (32 - (self.num_prices - 1).leading_zeros()).max(1)
    }
    fn schedule_bits(&self) -> u32 {
        self.num_prices * self.unit_bits
    }
    fn sum_width(&self) -> u32 {
        let parties = (self.honest_buyers + self.honest_sellers + self.adv_buyers + self.adv_sellers) as u64;
        let max = parties * self.num_prices as u64 * ((1u64 << self.unit_bits) - 1);
        (64 - max.leading_zeros()).max(1)
    }
}

/// Reference market clearing price: the largest price index whose
/// aggregate demand covers aggregate supply, or 0.
pub fn clearing_price(cfg: &AuctionConfig, buyers: &[Vec<u64>], sellers: &[Vec<u64>]) -> u64 {
    let p = cfg.num_prices as usize;
    let mut best = 0;
    for price in 0..p {
        let demand: u64 = buyers.iter().map(|s| s[price..].iter().sum::<u64>()).sum();
        let supply: u64 = sellers.iter().map(|s| s[..=price].iter().sum::<u64>()).sum();
        if demand >= supply {
            best = price as u64;
        }
    }
    best
}

/// Splits packed schedules: party `k` occupies `schedule_bits` bits at
/// offset `k * schedule_bits`, price `p` at `p * unit_bits` within it.
fn unpack(cfg: &AuctionConfig, v: &BigUint, parties: u32) -> Vec<Vec<u64>> {
    let sb = cfg.schedule_bits() as u64;
    let mask = (1u64 << cfg.unit_bits) - 1;
    (0..parties as u64)
        .map(|k| {
            (0..cfg.num_prices as u64)
                .map(|p| {
                    let off = k * sb + p * cfg.unit_bits as u64;
                    ((v >> off) & BigUint::from(mask)).to_u64().unwrap()
                })
                .collect()
        })
        .collect()
}

/// Double auction. Honest schedules (buyers, then sellers) form the target;
/// adversary schedules (buyers, then sellers) form the chosen input.
pub fn sugar_beets(cfg: AuctionConfig) -> Result<Functionality, FuncError> {
    require(cfg.num_prices >= 2, "need at least two price points")?;
    require(cfg.unit_bits >= 1 && cfg.unit_bits <= 16, "unit_bits must be in 1..=16")?;
    require(cfg.honest_buyers + cfg.honest_sellers >= 1, "need an honest party")?;
    require(cfg.adv_buyers + cfg.adv_sellers >= 1, "need an adversary party")?;
    let sb = cfg.schedule_bits();
    let sw = cfg.sum_width();
    let ow = cfg.output_width();
    let mut b = CircuitBuilder::new();
    let chosen = b.chosen((cfg.adv_buyers + cfg.adv_sellers) * sb)?;
    let target = b.target((cfg.honest_buyers + cfg.honest_sellers) * sb)?;

    let entries =
        |b: &mut CircuitBuilder, src: NodeId, first: u32, count: u32| -> Result<Vec<Vec<NodeId>>, CircuitError> {
            (first..first + count)
                .map(|k| {
                    (0..cfg.num_prices)
                        .map(|p| {
                            let lo = k * sb + p * cfg.unit_bits;
                            let e = b.extract(src, lo + cfg.unit_bits - 1, lo)?;
                            b.zext(e, sw)
                        })
                        .collect()
                })
                .collect()
        };
    let mut buyers = entries(&mut b, target, 0, cfg.honest_buyers)?;
    let mut sellers = entries(&mut b, target, cfg.honest_buyers, cfg.honest_sellers)?;
    buyers.extend(entries(&mut b, chosen, 0, cfg.adv_buyers)?);
    sellers.extend(entries(&mut b, chosen, cfg.adv_buyers, cfg.adv_sellers)?);

    let zero = b.constant(0u32, sw)?;
    let sum = |b: &mut CircuitBuilder, xs: &[NodeId]| -> Result<NodeId, CircuitError> {
        xs.iter().try_fold(zero, |acc, &x| b.add(acc, x))
    };
    let mut result = b.constant(0u32, ow)?;
    for p in 0..cfg.num_prices as usize {
        let d: Vec<NodeId> = buyers.iter().flat_map(|s| s[p..].iter().copied()).collect();
        let s: Vec<NodeId> = sellers.iter().flat_map(|s| s[..=p].iter().copied()).collect();
        let demand = sum(&mut b, &d)?;
        let supply = sum(&mut b, &s)?;
        let short = b.ult(demand, supply)?;
        let here = b.constant(p as u32, ow)?;
        result = b.ite(short, result, here)?;
    }

    let eval = move |c: &BigUint, t: &BigUint| {
        let honest = unpack(&cfg, t, cfg.honest_buyers + cfg.honest_sellers);
        let adv = unpack(&cfg, c, cfg.adv_buyers + cfg.adv_sellers);
        let (hb, hs) = honest.split_at(cfg.honest_buyers as usize);
        let (ab, as_) = adv.split_at(cfg.adv_buyers as usize);
        let buyers: Vec<Vec<u64>> = hb.iter().chain(ab).cloned().collect();
        let sellers: Vec<Vec<u64>> = hs.iter().chain(as_).cloned().collect();
        BigUint::from(clearing_price(&cfg, &buyers, &sellers))
    };
    Ok(Functionality::new(
        "sugar_beets",
        params(&[
            ("prices", cfg.num_prices as u64),
            ("units", cfg.unit_bits as u64),
            ("hb", cfg.honest_buyers as u64),
            ("hs", cfg.honest_sellers as u64),
            ("ab", cfg.adv_buyers as u64),
            ("as", cfg.adv_sellers as u64),
        ]),
        b.finish(result)?,
        eval,
    ))
}

pub fn and_gate() -> Result<Functionality, FuncError> {
    let mut b = CircuitBuilder::new();
    let c = b.chosen(1)?;
    let t = b.target(1)?;
    let o = b.and(c, t)?;
    Ok(Functionality::new("and_gate", BTreeMap::new(), b.finish(o)?, |c, t| {
        c & t
    }))
}

/// Ignores both inputs; nothing can be learned from it.
pub fn constant(width: u32, value: u64) -> Result<Functionality, FuncError> {
    require(width >= 1, "width must be at least 1")?;
    let ow = (64 - value.leading_zeros()).max(1);
    let mut b = CircuitBuilder::new();
    b.chosen(width)?;
    b.target(width)?;
    let o = b.constant(value, ow)?;
    Ok(Functionality::new(
        "constant",
        params(&[("width", width as u64), ("value", value)]),
        b.finish(o)?,
        move |_, _| BigUint::from(value),
    ))
}

/// Names accepted by [`by_name`].
pub const BUILTIN_NAMES: &[&str] = &[
    "millionaires",
    "dual_execution",
    "mean_average",
    "bucketed_mean",
    "wage_standard",
    "wage_circuit",
    "sugar_beets",
    "and_gate",
    "constant",
];

/// Builds a built-in functionality from a name, an optional width and
/// integer parameters.
pub fn by_name(name: &str, width: Option<u32>, p: &BTreeMap<String, u64>) -> Result<Functionality, FuncError> {
    let get = |k: &str, default: Option<u64>| -> Result<u64, FuncError> {
        p.get(k)
            .copied()
            .or(default)
            .ok_or_else(|| FuncError::BadParam(format!("{name} needs parameter {k}")))
    };
    let w = |default: u32| width.unwrap_or(default);
    match name {
        "millionaires" => millionaires(w(8)),
        "dual_execution" | "dual_execution_affine" => {
            let dim = get("dim", width.map(u64::from).or(Some(3)))?;
            dual_execution_affine(dim as u32)
        }
        "mean_average" | "mean" => mean_average(w(8)),
        "bucketed_mean" => bucketed_mean(w(12), get("bucket", Some(16))?),
        "wage" => {
            let v = if get("div", Some(0))? == 0 {
                WageVariant::StandardDiv
            } else {
                WageVariant::CircuitDiv
            };
            wage(w(12), v)
        }
        "wage_standard" => wage(w(12), WageVariant::StandardDiv),
        "wage_circuit" => wage(w(12), WageVariant::CircuitDiv),
        "sugar_beets" => sugar_beets(AuctionConfig {
            num_prices: get("prices", Some(4))? as u32,
            unit_bits: get("units", Some(2))? as u32,
            honest_buyers: get("hb", Some(0))? as u32,
            honest_sellers: get("hs", Some(1))? as u32,
            adv_buyers: get("ab", Some(1))? as u32,
            adv_sellers: get("as", Some(0))? as u32,
        }),
        "and_gate" | "and" => and_gate(),
        "constant" => constant(w(4), get("value", Some(5))?),
        other => Err(FuncError::Unknown(other.to_string())),
    }
}

/// User-supplied functionalities, checked against their reference
/// evaluator before they are accepted.
#[derive(Default)]
pub struct Registry {
    entries: BTreeMap<String, Functionality>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, f: Functionality) -> Result<(), FuncError> {
        if self.entries.contains_key(&f.name) || BUILTIN_NAMES.contains(&f.name.as_str()) {
            return Err(FuncError::Duplicate(f.name.clone()));
        }
        f.check_agreement(1000, 0)?;
        self.entries.insert(f.name.clone(), f);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Functionality> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Largest value representable in `width` bits.
pub fn max_value(width: u32) -> BigUint {
    (BigUint::one() << width) - 1u32
}
