use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Piecewise-constant function on a compact interval.
///
/// `breakpoints` is strictly increasing and spans the domain; piece `i` is the
/// open interval `(breakpoints[i], breakpoints[i + 1])` with value `values[i]`.
/// At a breakpoint the function takes its explicit point value if one is
/// given, otherwise the value of the piece to the right (the last breakpoint
/// takes the value of the piece to its left).
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point_values: Option<Vec<Rat>>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Result<Self> {
        Self::with_point_values(breakpoints, values, None)
    }

    pub fn with_point_values(
        breakpoints: Vec<Rat>,
        values: Vec<Rat>,
        point_values: Option<Vec<Rat>>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidStepFunction(msg));
        if breakpoints.len() < 2 {
            return invalid("need at least two breakpoints".into());
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return invalid(format!(
                "breakpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            ));
        }
        if values.len() != breakpoints.len() - 1 {
            return invalid(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            ));
        }
        if let Some(pv) = &point_values {
            if pv.len() != breakpoints.len() {
                return invalid(format!(
                    "{} breakpoints need {} point values, got {}",
                    breakpoints.len(),
                    breakpoints.len(),
                    pv.len()
                ));
            }
        }
        Ok(StepFunction {
            breakpoints,
            values,
            point_values,
        })
    }

    pub fn constant(lo: Rat, hi: Rat, value: Rat) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value])
    }

    /// `height` on `(lo, hi)`, zero elsewhere on `[0, 1]`.
    pub fn indicator(lo: &Rat, hi: &Rat, height: &Rat) -> Result<Self> {
        if lo.is_negative() || hi > &Rat::one() || lo >= hi {
            return Err(Error::InvalidStepFunction(format!(
                "indicator support ({lo}, {hi}) must be a nonempty subinterval of [0, 1]"
            )));
        }
        let mut bps = Vec::with_capacity(4);
        let mut vals = Vec::with_capacity(3);
        if !lo.is_zero() {
            bps.push(Rat::zero());
            vals.push(Rat::zero());
        }
        bps.push(lo.clone());
        vals.push(height.clone());
        bps.push(hi.clone());
        if hi < &Rat::one() {
            vals.push(Rat::zero());
            bps.push(Rat::one());
        }
        Self::new(bps, vals)
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn point_values(&self) -> Option<&[Rat]> {
        self.point_values.as_deref()
    }

    pub fn domain(&self) -> (&Rat, &Rat) {
        (
            &self.breakpoints[0],
            &self.breakpoints[self.breakpoints.len() - 1],
        )
    }

    /// `(lo, hi, value)` for each open piece.
    pub fn pieces(&self) -> impl Iterator<Item = (&Rat, &Rat, &Rat)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (&w[0], &w[1], v))
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return Err(Error::OutOfDomain {
                x: x.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        match self.breakpoints.binary_search(x) {
            Ok(i) => {
                if let Some(pv) = &self.point_values {
                    return Ok(pv[i].clone());
                }
                let piece = i.min(self.values.len() - 1);
                Ok(self.values[piece].clone())
            }
            Err(i) => Ok(self.values[i - 1].clone()),
        }
    }

    /// Exact integral over the domain. Point values do not contribute.
    pub fn integral(&self) -> Rat {
        self.pieces().map(|(lo, hi, v)| (hi - lo) * v).sum()
    }

    /// Largest `|value|` over pieces and explicit point values.
    pub fn sup_abs(&self) -> Rat {
        let pv = self.point_values.iter().flatten();
        self.values
            .iter()
            .chain(pv)
            .map(Rat::abs)
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// `(min, max)` over pieces and explicit point values.
    pub fn value_range(&self) -> (Rat, Rat) {
        let pv = self.point_values.iter().flatten();
        let all: Vec<&Rat> = self.values.iter().chain(pv).collect();
        let min = all.iter().copied().min().cloned().unwrap_or_else(Rat::zero);
        let max = all.iter().copied().max().cloned().unwrap_or_else(Rat::zero);
        (min, max)
    }

    /// Same function with extra breakpoints inserted. Points outside the
    /// domain are rejected; points already present are ignored.
    pub fn refine(&self, extra: &[Rat]) -> Result<StepFunction> {
        let (lo, hi) = self.domain();
        if let Some(x) = extra.iter().find(|x| *x < lo || *x > hi) {
            return Err(Error::OutOfDomain {
                x: x.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        let mut bps: Vec<Rat> = self.breakpoints.iter().chain(extra).cloned().collect();
        bps.sort_unstable();
        bps.dedup();
        let values = bps
            .windows(2)
            .map(|w| self.eval(&Rat::midpoint(&w[0], &w[1])))
            .collect::<Result<Vec<_>>>()?;
        let point_values = match &self.point_values {
            Some(_) => Some(
                bps.iter()
                    .map(|x| self.eval(x))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        StepFunction::with_point_values(bps, values, point_values)
    }

    /// Domain is exactly `[0, 1]` and every value lies in `[0, 1]`.
    pub fn check_unit_form(&self) -> Result<()> {
        let (lo, hi) = self.domain();
        if !lo.is_zero() || hi != &Rat::one() {
            return Err(Error::NotUnitForm(format!("domain is [{lo}, {hi}]")));
        }
        let (min, max) = self.value_range();
        if min.is_negative() || max > 1 {
            return Err(Error::NotUnitForm(format!(
                "values range over [{min}, {max}]"
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepFunctionRepr {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
    #[serde(default)]
    point_values: Option<Vec<Rat>>,
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = StepFunctionRepr::deserialize(deserializer)?;
        StepFunction::with_point_values(r.breakpoints, r.values, r.point_values)
            .map_err(serde::de::Error::custom)
    }
}
