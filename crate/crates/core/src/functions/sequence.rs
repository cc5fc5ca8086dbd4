use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::step::StepFunction;
use crate::error::{Error, Result};
use crate::rat::Rat;

/// Built-in test sequences on `[0, 1]` with values in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `height` on `(0, 1/n)`.
    ShrinkingBump,
    /// `height` on the n-th dyadic interval, see [`typewriter_slot`].
    SlidingTypewriter,
    /// `height` on `(1/4, 3/4)` for every n.
    FixedPlateau,
    /// `height` on `(0, 1/2 + 1/(n+1))`.
    FatPathShrinker,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ShrinkingBump,
        Family::SlidingTypewriter,
        Family::FixedPlateau,
        Family::FatPathShrinker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ShrinkingBump => "shrinking-bump",
            Family::SlidingTypewriter => "sliding-typewriter",
            Family::FixedPlateau => "fixed-plateau",
            Family::FatPathShrinker => "fat-path-shrinker",
        }
    }

    /// Support `(lo, hi)` of the n-th term, `n >= 1`.
    pub fn support(self, n: usize) -> (Rat, Rat) {
        assert!(n >= 1, "family terms are indexed from 1");
        let n = n as i64;
        match self {
            Family::ShrinkingBump => (Rat::zero(), Rat::new(1, n)),
            Family::SlidingTypewriter => {
                let (level, slot) = typewriter_slot(n as u64);
                let width = Rat::inv_pow2(level);
                let lo = Rat::from_int(slot as i64) * &width;
                let hi = &lo + &width;
                (lo, hi)
            }
            Family::FixedPlateau => (Rat::new(1, 4), Rat::new(3, 4)),
            Family::FatPathShrinker => (Rat::zero(), Rat::new(1, 2) + Rat::new(1, n + 1)),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.chars().take(64).collect()))
    }
}

/// Typewriter enumeration: `n >= 1` maps to level `j = floor(log2 n)` and
/// slot `k = n - 2^j`, i.e. the interval `(k / 2^j, (k + 1) / 2^j)`.
pub fn typewriter_slot(n: u64) -> (u32, u64) {
    assert!(n >= 1, "typewriter indices start at 1");
    let level = 63 - n.leading_zeros();
    (level, n - (1u64 << level))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    /// Value on the support; must lie in `(0, 1]`.
    #[serde(default = "Rat::one")]
    pub height: Rat,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { height: Rat::one() }
    }
}

impl FamilyParams {
    fn validate(&self) -> Result<()> {
        if !self.height.is_positive() || self.height > 1 {
            return Err(Error::InvalidParams(format!(
                "height {} must lie in (0, 1]",
                self.height
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Source {
    Family {
        family: Family,
        params: FamilyParams,
    },
    Explicit(Vec<StepFunction>),
    Reduced {
        inner: Box<FunctionSequence>,
        limit: StepFunction,
    },
}

/// A sequence `f_1, f_2, ...` of step functions sharing a domain and a
/// uniform bound `C`.
///
/// Explicit lists are checked for `|f_n| < C` on construction. Built-in
/// families live in unit form: domain `[0, 1]`, values in `[0, 1]`, declared
/// bound `C = 1`. Family terms may reach the value 1, so their bound is not
/// strict; they are already in the shape the extraction pipeline consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSequence {
    source: Source,
    bound: Rat,
    domain: (Rat, Rat),
}

/// How a reduced sequence relates to the one it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReductionNote {
    pub original_domain: (Rat, Rat),
    pub bound: Rat,
    /// `1 / (2C)`.
    pub scale: Rat,
}

impl ReductionNote {
    pub fn describe(&self) -> String {
        format!(
            "g_n(t) = |f_n(x) - f(x)| / (2*{}) with x = {} + t*({} - {}); \
             integrals of f_n tend to that of f iff those of g_n tend to 0, \
             and f_n -> f pointwise iff g_n -> 0 pointwise",
            self.bound, self.original_domain.0, self.original_domain.1, self.original_domain.0
        )
    }
}

pub fn make_family(family: Family, params: FamilyParams) -> Result<FunctionSequence> {
    params.validate()?;
    Ok(FunctionSequence {
        source: Source::Family { family, params },
        bound: Rat::one(),
        domain: (Rat::zero(), Rat::one()),
    })
}

impl FunctionSequence {
    pub fn family(family: Family) -> FunctionSequence {
        make_family(family, FamilyParams::default()).expect("default params are valid")
    }

    pub fn explicit(terms: Vec<StepFunction>, bound: Rat, domain: (Rat, Rat)) -> Result<Self> {
        if !bound.is_positive() {
            return Err(Error::InvalidParams(format!(
                "bound C = {bound} must be positive"
            )));
        }
        if domain.0 >= domain.1 {
            return Err(Error::InvalidParams(format!(
                "domain [{}, {}] is empty",
                domain.0, domain.1
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            let (lo, hi) = t.domain();
            if (lo, hi) != (&domain.0, &domain.1) {
                return Err(Error::DomainMismatch {
                    seq_lo: domain.0.clone(),
                    seq_hi: domain.1.clone(),
                    limit_lo: lo.clone(),
                    limit_hi: hi.clone(),
                });
            }
            check_bound(t, &bound, Some(i + 1))?;
        }
        Ok(FunctionSequence {
            source: Source::Explicit(terms),
            bound,
            domain,
        })
    }

    pub fn bound(&self) -> &Rat {
        &self.bound
    }

    pub fn domain(&self) -> (&Rat, &Rat) {
        (&self.domain.0, &self.domain.1)
    }

    /// Number of terms, or `None` for unbounded families.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Family { .. } => None,
            Source::Explicit(terms) => Some(terms.len()),
            Source::Reduced { inner, .. } => inner.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn family_kind(&self) -> Option<Family> {
        match &self.source {
            Source::Family { family, .. } => Some(*family),
            Source::Reduced { inner, .. } => inner.family_kind(),
            Source::Explicit(_) => None,
        }
    }

    pub fn reduction(&self) -> Option<ReductionNote> {
        match &self.source {
            Source::Reduced { inner, .. } => Some(ReductionNote {
                original_domain: inner.domain.clone(),
                bound: inner.bound.clone(),
                scale: Rat::one() / (Rat::from_int(2) * &inner.bound),
            }),
            _ => None,
        }
    }

    /// The n-th term, `n >= 1`.
    pub fn term(&self, n: usize) -> Result<StepFunction> {
        if n == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                len: self.len().unwrap_or(usize::MAX),
            });
        }
        match &self.source {
            Source::Family { family, params } => {
                let (lo, hi) = family.support(n);
                StepFunction::indicator(&lo, &hi, &params.height)
            }
            Source::Explicit(terms) => terms.get(n - 1).cloned().ok_or(Error::IndexOutOfRange {
                index: n,
                len: terms.len(),
            }),
            Source::Reduced { inner, limit } => {
                let f = inner.term(n)?;
                check_bound(&f, &inner.bound, Some(n))?;
                reduce_term(&f, limit, &inner.bound)
            }
        }
    }

    /// Terms `1..=count` (fewer if the sequence is shorter).
    pub fn terms(&self, count: usize) -> Result<Vec<StepFunction>> {
        let count = self.len().map_or(count, |len| len.min(count));
        (1..=count).map(|n| self.term(n)).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn spec_hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        Self::from_json_value(v)
    }

    fn from_json_value(v: Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Json("sequence spec must be a JSON object".into()))?;
        let (seq, limit) = if obj.contains_key("family") {
            let file: FamilyFile = serde_json::from_value(v)?;
            let family: Family = file.family.parse()?;
            (make_family(family, file.params)?, file.limit)
        } else if obj.contains_key("terms") {
            let file: ExplicitFile = serde_json::from_value(v)?;
            (
                FunctionSequence::explicit(file.terms, file.bound, file.domain)?,
                file.limit,
            )
        } else {
            return Err(Error::Json(
                "sequence spec needs either a \"family\" or a \"terms\" key".into(),
            ));
        };
        match limit {
            Some(limit) => reduce_to_unit(&seq, &limit),
            None => Ok(seq),
        }
    }
}

fn check_bound(f: &StepFunction, bound: &Rat, index: Option<usize>) -> Result<()> {
    let sup = f.sup_abs();
    if &sup >= bound {
        return Err(Error::BoundViolated {
            index,
            value: sup,
            bound: bound.clone(),
        });
    }
    Ok(())
}

/// Rescales `|f_n - f|` onto `[0, 1]`:
/// `g_n(t) = |f_n(a + t(b - a)) - f(a + t(b - a))| / (2C)`.
///
/// The result is lazy; `C` is re-checked against each term as it is produced.
pub fn reduce_to_unit(seq: &FunctionSequence, limit: &StepFunction) -> Result<FunctionSequence> {
    let (lim_lo, lim_hi) = limit.domain();
    if (lim_lo, lim_hi) != seq.domain() {
        return Err(Error::DomainMismatch {
            seq_lo: seq.domain.0.clone(),
            seq_hi: seq.domain.1.clone(),
            limit_lo: lim_lo.clone(),
            limit_hi: lim_hi.clone(),
        });
    }
    check_bound(limit, &seq.bound, None)?;
    if let Source::Explicit(terms) = &seq.source {
        for (i, t) in terms.iter().enumerate() {
            check_bound(t, &seq.bound, Some(i + 1))?;
        }
    }
    Ok(FunctionSequence {
        source: Source::Reduced {
            inner: Box::new(seq.clone()),
            limit: limit.clone(),
        },
        bound: Rat::one(),
        domain: (Rat::zero(), Rat::one()),
    })
}

fn reduce_term(f: &StepFunction, limit: &StepFunction, bound: &Rat) -> Result<StepFunction> {
    let (a, b) = f.domain();
    let width = b - a;
    let scale = Rat::one() / (Rat::from_int(2) * bound);
    let mut xs: Vec<Rat> = f
        .breakpoints()
        .iter()
        .chain(limit.breakpoints())
        .cloned()
        .collect();
    xs.sort_unstable();
    xs.dedup();
    let diff = |x: &Rat| -> Result<Rat> { Ok((f.eval(x)? - limit.eval(x)?).abs() * &scale) };
    let values = xs
        .windows(2)
        .map(|w| diff(&Rat::midpoint(&w[0], &w[1])))
        .collect::<Result<Vec<_>>>()?;
    let point_values = if f.point_values().is_some() || limit.point_values().is_some() {
        Some(xs.iter().map(diff).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let ts = xs.iter().map(|x| (x - a) / &width).collect();
    StepFunction::with_point_values(ts, values, point_values)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    family: String,
    #[serde(default)]
    params: FamilyParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limit: Option<StepFunction>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitFile {
    terms: Vec<StepFunction>,
    bound: Rat,
    domain: (Rat, Rat),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limit: Option<StepFunction>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum FileRepr {
    Family(FamilyFile),
    Explicit(ExplicitFile),
}

fn to_file_repr(seq: &FunctionSequence, limit: Option<&StepFunction>) -> Result<FileRepr> {
    let limit = limit.cloned();
    Ok(match &seq.source {
        Source::Family { family, params } => FileRepr::Family(FamilyFile {
            family: family.name().to_string(),
            params: params.clone(),
            limit,
        }),
        Source::Explicit(terms) => FileRepr::Explicit(ExplicitFile {
            terms: terms.clone(),
            bound: seq.bound.clone(),
            domain: seq.domain.clone(),
            limit,
        }),
        Source::Reduced { inner, limit: l } => {
            if limit.is_some() {
                return Err(Error::Json("nested reductions have no file form".into()));
            }
            to_file_repr(inner, Some(l))?
        }
    })
}

impl Serialize for FunctionSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        to_file_repr(self, None)
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FunctionSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        FunctionSequence::from_json_value(v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn typewriter_enumeration() {
        assert_eq!(typewriter_slot(1), (0, 0));
        assert_eq!(typewriter_slot(2), (1, 0));
        assert_eq!(typewriter_slot(3), (1, 1));
        assert_eq!(typewriter_slot(4), (2, 0));
        assert_eq!(typewriter_slot(7), (2, 3));
        assert_eq!(typewriter_slot(8), (3, 0));
    }

    #[test]
    fn typewriter_third_term_is_right_half() {
        // n = 3: level 1, slot 1.
        let seq = FunctionSequence::family(Family::SlidingTypewriter);
        assert_eq!(
            Family::SlidingTypewriter.support(3),
            (rat("1/2"), Rat::one())
        );
        assert_eq!(seq.term(3).unwrap().integral(), rat("1/2"));
        assert_eq!(
            Family::SlidingTypewriter.support(2),
            (Rat::zero(), rat("1/2"))
        );
    }

    #[test]
    fn family_terms() {
        let bump = FunctionSequence::family(Family::ShrinkingBump)
            .term(4)
            .unwrap();
        assert_eq!(bump.integral(), rat("1/4"));
        assert_eq!(bump.eval(&rat("1/8")).unwrap(), Rat::one());
        assert_eq!(bump.eval(&rat("1/2")).unwrap(), Rat::zero());

        let plateau = FunctionSequence::family(Family::FixedPlateau)
            .term(7)
            .unwrap();
        assert_eq!(plateau.integral(), rat("1/2"));
        assert_eq!(plateau.eval(&rat("1/2")).unwrap(), Rat::one());

        let fat = FunctionSequence::family(Family::FatPathShrinker)
            .term(1)
            .unwrap();
        assert_eq!(fat.integral(), Rat::one());
        let fat3 = FunctionSequence::family(Family::FatPathShrinker)
            .term(3)
            .unwrap();
        assert_eq!(fat3.integral(), rat("3/4"));
    }

    #[test]
    fn family_parsing() {
        assert_eq!(
            "fixed-plateau".parse::<Family>().unwrap(),
            Family::FixedPlateau
        );
        assert!(matches!(
            "bump".parse::<Family>(),
            Err(Error::UnknownFamily(_))
        ));
        assert!(make_family(Family::FixedPlateau, FamilyParams { height: rat("3/2") }).is_err());
        assert!(make_family(
            Family::FixedPlateau,
            FamilyParams {
                height: Rat::zero()
            }
        )
        .is_err());
    }

    #[test]
    fn family_values_stay_in_unit_range() {
        for family in Family::ALL {
            let seq = FunctionSequence::family(family);
            for n in 1..=200 {
                seq.term(n).unwrap().check_unit_form().unwrap();
            }
        }
    }

    #[test]
    fn explicit_list_checks_bound_strictly() {
        let t = StepFunction::constant(Rat::zero(), Rat::one(), Rat::one()).unwrap();
        let err =
            FunctionSequence::explicit(vec![t.clone()], Rat::one(), (Rat::zero(), Rat::one()));
        assert!(matches!(
            err,
            Err(Error::BoundViolated { index: Some(1), .. })
        ));
        assert!(FunctionSequence::explicit(vec![t], rat("2"), (Rat::zero(), Rat::one())).is_ok());
    }

    #[test]
    fn reduce_identical_terms_to_zero() {
        let f = StepFunction::new(
            vec![Rat::zero(), rat("1/3"), rat("2")],
            vec![rat("-1"), rat("3/2")],
        )
        .unwrap();
        let seq = FunctionSequence::explicit(vec![f.clone(); 3], rat("2"), (Rat::zero(), rat("2")))
            .unwrap();
        let g = reduce_to_unit(&seq, &f).unwrap();
        for n in 1..=3 {
            let t = g.term(n).unwrap();
            assert!(t.values().iter().all(Rat::is_zero));
            assert_eq!(t.domain(), (&Rat::zero(), &Rat::one()));
        }
        assert!(g.reduction().is_some());
    }

    #[test]
    fn reduce_rescales_constants() {
        let terms = ["1", "-3/2", "1/2"]
            .iter()
            .map(|c| StepFunction::constant(Rat::zero(), rat("2"), rat(c)).unwrap())
            .collect();
        let seq = FunctionSequence::explicit(terms, rat("2"), (Rat::zero(), rat("2"))).unwrap();
        let zero = StepFunction::constant(Rat::zero(), rat("2"), Rat::zero()).unwrap();
        let g = reduce_to_unit(&seq, &zero).unwrap();
        assert_eq!(g.term(1).unwrap().values(), [rat("1/4")]);
        assert_eq!(g.term(2).unwrap().values(), [rat("3/8")]);
        assert_eq!(g.term(3).unwrap().values(), [rat("1/8")]);
        assert_eq!(g.term(2).unwrap().domain(), (&Rat::zero(), &Rat::one()));
    }

    #[test]
    fn reduce_rejects_mismatch_and_bad_bound() {
        let seq = FunctionSequence::explicit(
            vec![StepFunction::constant(Rat::zero(), Rat::one(), Rat::zero()).unwrap()],
            Rat::one(),
            (Rat::zero(), Rat::one()),
        )
        .unwrap();
        let wrong_domain = StepFunction::constant(Rat::zero(), rat("2"), Rat::zero()).unwrap();
        assert!(matches!(
            reduce_to_unit(&seq, &wrong_domain),
            Err(Error::DomainMismatch { .. })
        ));
        let too_big = StepFunction::constant(Rat::zero(), Rat::one(), Rat::one()).unwrap();
        assert!(matches!(
            reduce_to_unit(&seq, &too_big),
            Err(Error::BoundViolated { index: None, .. })
        ));
        // Family terms reach 1 = C, which the strict bound refuses.
        let fam = FunctionSequence::family(Family::FixedPlateau);
        let zero = StepFunction::constant(Rat::zero(), Rat::one(), Rat::zero()).unwrap();
        let g = reduce_to_unit(&fam, &zero).unwrap();
        assert!(matches!(
            g.term(1),
            Err(Error::BoundViolated { index: Some(1), .. })
        ));
    }

    #[test]
    fn sequence_file_forms() {
        let fam = FunctionSequence::from_json_str(r#"{"family":"sliding-typewriter","params":{}}"#)
            .unwrap();
        assert_eq!(fam.family_kind(), Some(Family::SlidingTypewriter));
        let fam2 = FunctionSequence::from_json_str(r#"{"family":"shrinking-bump"}"#).unwrap();
        assert_eq!(fam2.term(2).unwrap().integral(), rat("1/2"));
        let half = FunctionSequence::from_json_str(
            r#"{"family":"fixed-plateau","params":{"height":"1/2"}}"#,
        )
        .unwrap();
        assert_eq!(half.term(1).unwrap().integral(), rat("1/4"));

        let explicit = FunctionSequence::from_json_str(
            r#"{"terms":[{"breakpoints":["0","1/4","1"],"values":["1","0"]}],"bound":"2","domain":["0","1"]}"#,
        )
        .unwrap();
        assert_eq!(explicit.len(), Some(1));
        let back =
            FunctionSequence::from_json_str(&serde_json::to_string(&explicit).unwrap()).unwrap();
        assert_eq!(back, explicit);

        for bad in [
            r#"[]"#,
            r#"{"family":"nope"}"#,
            r#"{"family":"fixed-plateau","params":{"width":"1"}}"#,
            r#"{"terms":[],"bound":"1"}"#,
            r#"{"what":1}"#,
        ] {
            assert!(FunctionSequence::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn reduced_sequence_round_trips_through_file_form() {
        let json = r#"{"terms":[{"breakpoints":["-1","0","1"],"values":["1","-1"]}],"bound":"3/2","domain":["-1","1"],"limit":{"breakpoints":["-1","1"],"values":["0"]}}"#;
        let seq = FunctionSequence::from_json_str(json).unwrap();
        assert_eq!(seq.term(1).unwrap().values(), [rat("1/3"), rat("1/3")]);
        assert_eq!(serde_json::to_string(&seq).unwrap(), json);
        assert_eq!(seq.spec_hash().len(), 64);
    }
}
