//! Verification reports and their CSV / JSON forms.
//!
//! Floats are written with 17 significant digits in both formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::interval::Interval;
use crate::lattice::BallGraph;
use crate::mode::Mode;

/// CSV header shared by every tabular output of the harness.
pub const CSV_HEADER: &str =
    "check,graph,dim,radius,n,m,i,p,mode,value_or_lhs,rhs,ci_low,ci_high,samples,seed,verdict";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Worst of two verdicts: fail beats inconclusive beats pass.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Exact,
    MonteCarlo,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::MonteCarlo => "monte-carlo",
        }
    }
}

impl From<&Mode> for EvalMode {
    fn from(m: &Mode) -> Self {
        if m.is_exact() {
            EvalMode::Exact
        } else {
            EvalMode::MonteCarlo
        }
    }
}

/// Direction of the checked inequality `lhs (>= | <=) rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Instance {
    pub graph: String,
    pub dim: usize,
    pub radius: usize,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub i: Option<usize>,
    #[serde(serialize_with = "ser_opt")]
    pub p: Option<f64>,
    /// Free-form description of inhomogeneous parameters.
    pub params: Option<String>,
}

impl Instance {
    pub fn of(g: &BallGraph) -> Self {
        Self {
            graph: g.family().short_name().into(),
            dim: g.param(),
            radius: g.radius(),
            ..Default::default()
        }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn i(mut self, i: usize) -> Self {
        self.i = Some(i);
        self
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn params(mut self, label: impl Into<String>) -> Self {
        self.params = Some(label.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub instance: Instance,
    pub relation: Relation,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_pair")]
    pub lhs_ci: Option<(f64, f64)>,
    #[serde(serialize_with = "ser_pair")]
    pub rhs_ci: Option<(f64, f64)>,
    pub mode: EvalMode,
    #[serde(serialize_with = "ser_f64")]
    pub margin: f64,
    pub verdict: Verdict,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub note: String,
    #[serde(serialize_with = "ser_map")]
    pub extras: BTreeMap<String, f64>,
}

impl VerificationReport {
    /// Decides `lhs relation rhs` with additive `slack`.
    ///
    /// With intervals, the verdict is pass when every value in the intervals
    /// satisfies the inequality, fail when every value violates it, and
    /// inconclusive otherwise. Exact inputs are points, so exact reports are
    /// never inconclusive.
    pub fn decide(
        check: impl Into<String>,
        instance: Instance,
        relation: Relation,
        lhs: Interval,
        rhs: Interval,
        slack: f64,
        mode: &Mode,
    ) -> Self {
        let statistical = !mode.is_exact() && !(lhs.is_point() && rhs.is_point());
        let verdict = match relation {
            Relation::Ge if lhs.lo >= rhs.hi - slack => Verdict::Pass,
            Relation::Ge if lhs.hi < rhs.lo - slack => Verdict::Fail,
            Relation::Le if lhs.hi <= rhs.lo + slack => Verdict::Pass,
            Relation::Le if lhs.lo > rhs.hi + slack => Verdict::Fail,
            _ if mode.is_exact() => Verdict::Fail,
            _ => Verdict::Inconclusive,
        };
        let interval = |x: Interval| {
            if x.is_point() {
                None
            } else {
                Some((x.lo, x.hi))
            }
        };
        Self {
            check: check.into(),
            instance,
            relation,
            lhs: lhs.value,
            rhs: rhs.value,
            lhs_ci: interval(lhs),
            rhs_ci: interval(rhs),
            mode: mode.into(),
            margin: slack
                + if statistical {
                    lhs.half_width() + rhs.half_width()
                } else {
                    0.0
                },
            verdict,
            samples: mode.samples(),
            seed: mode.seed(),
            note: String::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else if !note.is_empty() {
            self.note = format!("{}; {}", self.note, note);
        }
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    /// Folds a sub-check into this report's verdict.
    pub fn require(mut self, verdict: Verdict, why: &str) -> Self {
        if verdict != Verdict::Pass {
            self = self.with_note(format!("{why}: {}", verdict.label()));
        }
        self.verdict = self.verdict.and(verdict);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_csv_row(&self) -> String {
        let inst = &self.instance;
        let mut row = String::new();
        let opt_usize = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.check),
            csv_field(&inst.graph),
            inst.dim,
            inst.radius,
            opt_usize(inst.n),
            opt_usize(inst.m),
            opt_usize(inst.i),
            inst.p.map(fmt_f64).unwrap_or_default(),
            self.mode.label(),
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            self.lhs_ci.map(|c| fmt_f64(c.0)).unwrap_or_default(),
            self.lhs_ci.map(|c| fmt_f64(c.1)).unwrap_or_default(),
            self.samples.map(|v| v.to_string()).unwrap_or_default(),
            self.seed.map(|v| v.to_string()).unwrap_or_default(),
            self.verdict.label(),
        );
        row
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// A reported quantity without an inequality attached, such as an estimate of `theta_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub check: String,
    pub instance: Instance,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    #[serde(serialize_with = "ser_pair")]
    pub ci: Option<(f64, f64)>,
    pub mode: EvalMode,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

impl Measurement {
    pub fn new(check: impl Into<String>, instance: Instance, value: Interval, mode: &Mode) -> Self {
        Self {
            check: check.into(),
            instance,
            value: value.value,
            ci: if value.is_point() {
                None
            } else {
                Some((value.lo, value.hi))
            },
            mode: mode.into(),
            samples: mode.samples(),
            seed: mode.seed(),
        }
    }

    /// CSV row with empty `rhs` and `verdict` columns.
    pub fn to_csv_row(&self) -> String {
        let inst = &self.instance;
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},,{},{},{},{},",
            csv_field(&self.check),
            csv_field(&inst.graph),
            inst.dim,
            inst.radius,
            opt(inst.n),
            opt(inst.m),
            opt(inst.i),
            inst.p.map(fmt_f64).unwrap_or_default(),
            self.mode.label(),
            fmt_f64(self.value),
            self.ci.map(|c| fmt_f64(c.0)).unwrap_or_default(),
            self.ci.map(|c| fmt_f64(c.1)).unwrap_or_default(),
            self.samples.map(|v| v.to_string()).unwrap_or_default(),
            self.seed.map(|v| v.to_string()).unwrap_or_default(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measurement serializes")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Serializes a float as a raw 17-significant-digit JSON number (`null` if not finite).
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        RawValue::from_string(fmt_f64(*x))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    } else {
        s.serialize_none()
    }
}

pub fn ser_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}

pub fn ser_pair<S: Serializer>(x: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some((a, b)) => [F17(*a), F17(*b)].serialize(s),
        None => s.serialize_none(),
    }
}

fn ser_map<S: Serializer>(x: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(x.len()))?;
    for (k, v) in x {
        map.serialize_entry(k, &F17(*v))?;
    }
    map.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> Instance {
        Instance {
            graph: "zd".into(),
            dim: 1,
            radius: 2,
            ..Default::default()
        }
        .n(1)
        .m(1)
        .p(0.5)
    }

    #[test]
    fn exact_is_never_inconclusive() {
        let mode = Mode::exact();
        let pass = VerificationReport::decide(
            "x",
            inst(),
            Relation::Ge,
            Interval::point(0.5),
            Interval::point(0.5),
            1e-10,
            &mode,
        );
        assert_eq!(pass.verdict, Verdict::Pass);
        let fail = VerificationReport::decide(
            "x",
            inst(),
            Relation::Ge,
            Interval::point(0.4),
            Interval::point(0.5),
            1e-10,
            &mode,
        );
        assert_eq!(fail.verdict, Verdict::Fail);
    }

    #[test]
    fn statistical_verdicts() {
        let mode = Mode::monte_carlo(100, 1, 0.999);
        let d = |l: Interval, r: Interval| {
            VerificationReport::decide("x", inst(), Relation::Ge, l, r, 0.0, &mode).verdict
        };
        assert_eq!(
            d(Interval::new(0.6, 0.7, 0.8), Interval::new(0.3, 0.4, 0.5)),
            Verdict::Pass
        );
        assert_eq!(
            d(Interval::new(0.3, 0.4, 0.5), Interval::new(0.6, 0.7, 0.8)),
            Verdict::Fail
        );
        assert_eq!(
            d(Interval::new(0.3, 0.45, 0.6), Interval::new(0.4, 0.5, 0.6)),
            Verdict::Inconclusive
        );
        let le = VerificationReport::decide(
            "x",
            inst(),
            Relation::Le,
            Interval::new(0.1, 0.2, 0.3),
            Interval::point(0.5),
            0.0,
            &mode,
        );
        assert_eq!(le.verdict, Verdict::Pass);
        assert!((le.margin - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_and_json() {
        let r = VerificationReport::decide(
            "cor-homog",
            inst(),
            Relation::Ge,
            Interval::point(0.765625),
            Interval::point(0.25 / 0.5625),
            1e-10,
            &Mode::exact(),
        );
        assert_eq!(
            r.to_csv_row(),
            "cor-homog,zd,1,2,1,1,,5.0000000000000000e-1,exact,7.6562500000000000e-1,4.4444444444444442e-1,,,,,pass"
        );
        assert_eq!(
            CSV_HEADER.split(',').count(),
            r.to_csv_row().split(',').count()
        );
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["lhs"].as_f64().unwrap(), 0.765625);
        assert_eq!(json["verdict"], "pass");
        assert!(r.to_json().contains("\"lhs\":7.6562500000000000e-1"));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 5e-9] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
