//! Pluggable univariate leaf distributions.
//!
//! A [`LeafFamily`] bundles the handlers a leaf type needs across the whole
//! engine: log-density, sampler, mode, maximum-likelihood fit and parameter
//! validation, plus optional hooks for C emission, random-structure defaults
//! and free-parameter counting. Families are looked up by case-insensitive
//! name in a [`FamilyRegistry`]; the registry ships with `categorical`,
//! `gaussian` and `pareto` and accepts custom families through
//! [`FamilyRegistry::register`].
//!
//! Handler contract: `log_density` returns a finite value or negative
//! infinity (zero density); it returns NaN to signal an out-of-domain
//! observed value, which the evaluator turns into a data error naming the
//! offending row and column.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::Domain;
use crate::rng::RandomSource;

const LN_2PI: f64 = 1.8378770664093453;

/// A single leaf parameter: scalar or vector of reals.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ParamValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ParamValue::Scalar(v) => Some(*v),
            ParamValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            ParamValue::Vector(v) => Some(v),
            ParamValue::Scalar(_) => None,
        }
    }

    fn scalar_count(&self) -> usize {
        match self {
            ParamValue::Scalar(_) => 1,
            ParamValue::Vector(v) => v.len(),
        }
    }
}

/// Ordered name -> value record of leaf parameters.
///
/// Order is canonicalized to the family's schema order when a leaf is
/// constructed, which keeps printing and serialization deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamMap {
    entries: Vec<(String, ParamValue)>,
}

impl ParamMap {
    pub fn new() -> Self {
        ParamMap::default()
    }

    /// Builder-style insert; replaces an existing entry of the same name.
    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.set(name, value);
        self
    }

    pub fn with_scalar(self, name: &str, value: f64) -> Self {
        self.with(name, ParamValue::Scalar(value))
    }

    pub fn with_vector(self, name: &str, values: Vec<f64>) -> Self {
        self.with(name, ParamValue::Vector(values))
    }

    pub fn set(&mut self, name: &str, value: ParamValue) {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| n == name) {
            slot.1 = value;
        } else {
            self.entries.push((name.to_string(), value));
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(ParamValue::as_scalar)
    }

    pub fn vector(&self, name: &str) -> Option<&[f64]> {
        self.get(name).and_then(ParamValue::as_vector)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.scalar_count()).sum()
    }

    /// Reorder entries into `names` order; every name must be present and
    /// no extras are allowed.
    pub(crate) fn canonicalize(&self, names: &[String]) -> Result<ParamMap> {
        let mut out = ParamMap::new();
        for name in names {
            match self.get(name) {
                Some(v) => out.set(name, v.clone()),
                None => {
                    return Err(Error::Construction(format!(
                        "missing parameter '{name}'"
                    )))
                }
            }
        }
        for (name, _) in self.iter() {
            if !names.iter().any(|n| n == name) {
                return Err(Error::Construction(format!(
                    "unknown parameter '{name}'"
                )));
            }
        }
        Ok(out)
    }
}

/// Hyperparameters forwarded into family MLE handlers.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Laplace smoothing pseudo-count for categorical fits.
    pub laplace_alpha: f64,
    /// Lower bound applied to fitted Gaussian standard deviations.
    pub std_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            laplace_alpha: 1.0,
            std_floor: 1e-6,
        }
    }
}

pub type LogDensityFn = Arc<dyn Fn(&ParamMap, f64) -> f64 + Send + Sync>;
pub type SampleFn = Arc<dyn Fn(&ParamMap, &mut RandomSource) -> f64 + Send + Sync>;
pub type ModeFn = Arc<dyn Fn(&ParamMap) -> f64 + Send + Sync>;
pub type MleFn = Arc<dyn Fn(&[f64], &Domain, &FitOptions) -> Result<ParamMap> + Send + Sync>;
pub type ValidateFn = Arc<dyn Fn(&ParamMap) -> Vec<String> + Send + Sync>;
/// Given params and a C expression for the input value, emit a C99
/// expression computing the log-density.
pub type EmitCFn = Arc<dyn Fn(&ParamMap, &str) -> String + Send + Sync>;
pub type RandomParamsFn = Arc<dyn Fn(&Domain, &mut RandomSource) -> ParamMap + Send + Sync>;
pub type FreeParamsFn = Arc<dyn Fn(&ParamMap) -> usize + Send + Sync>;

/// A registered leaf distribution family.
#[derive(Clone)]
pub struct LeafFamily {
    name: String,
    display: String,
    param_names: Vec<String>,
    log_density: LogDensityFn,
    sample: SampleFn,
    mode: ModeFn,
    mle: MleFn,
    validate: ValidateFn,
    emit_c: Option<EmitCFn>,
    random_params: Option<RandomParamsFn>,
    free_params: Option<FreeParamsFn>,
}

impl std::fmt::Debug for LeafFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LeafFamily")
            .field("name", &self.name)
            .field("param_names", &self.param_names)
            .finish()
    }
}

impl LeafFamily {
    /// Canonical (lowercase) registry name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Name used by the DSL printer and plots, e.g. `Categorical`.
    pub fn display(&self) -> &str {
        &self.display
    }

    /// Parameter schema order (excludes `scope`).
    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn log_density(&self, params: &ParamMap, value: f64) -> f64 {
        (self.log_density)(params, value)
    }

    pub fn sample(&self, params: &ParamMap, rng: &mut RandomSource) -> f64 {
        (self.sample)(params, rng)
    }

    pub fn mode(&self, params: &ParamMap) -> f64 {
        (self.mode)(params)
    }

    pub fn mle(&self, values: &[f64], domain: &Domain, opts: &FitOptions) -> Result<ParamMap> {
        (self.mle)(values, domain, opts)
    }

    /// Empty vector means the params are valid.
    pub fn validate(&self, params: &ParamMap) -> Vec<String> {
        (self.validate)(params)
    }

    pub fn emit_c(&self, params: &ParamMap, input: &str) -> Option<String> {
        self.emit_c.as_ref().map(|f| f(params, input))
    }

    pub fn random_params(&self, domain: &Domain, rng: &mut RandomSource) -> Option<ParamMap> {
        self.random_params.as_ref().map(|f| f(domain, rng))
    }

    /// Free parameters contributed by one leaf of this family.
    pub fn free_params(&self, params: &ParamMap) -> usize {
        match &self.free_params {
            Some(f) => f(params),
            None => params.scalar_count(),
        }
    }
}

/// Descriptor for registering a leaf family. All five core handlers
/// (log-density, sampler, mode, MLE, validator) are mandatory; emission,
/// random defaults and free-parameter counting are optional extensions.
pub struct FamilyDescriptor {
    name: String,
    display: String,
    param_names: Vec<String>,
    log_density: Option<LogDensityFn>,
    sample: Option<SampleFn>,
    mode: Option<ModeFn>,
    mle: Option<MleFn>,
    validate: Option<ValidateFn>,
    emit_c: Option<EmitCFn>,
    random_params: Option<RandomParamsFn>,
    free_params: Option<FreeParamsFn>,
}

impl FamilyDescriptor {
    pub fn new(name: &str) -> Self {
        FamilyDescriptor {
            name: name.to_lowercase(),
            display: name.to_string(),
            param_names: Vec::new(),
            log_density: None,
            sample: None,
            mode: None,
            mle: None,
            validate: None,
            emit_c: None,
            random_params: None,
            free_params: None,
        }
    }

    pub fn display(mut self, display: &str) -> Self {
        self.display = display.to_string();
        self
    }

    pub fn params(mut self, names: &[&str]) -> Self {
        self.param_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn log_density(
        mut self,
        f: impl Fn(&ParamMap, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.log_density = Some(Arc::new(f));
        self
    }

    pub fn sample(
        mut self,
        f: impl Fn(&ParamMap, &mut RandomSource) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.sample = Some(Arc::new(f));
        self
    }

    pub fn mode(mut self, f: impl Fn(&ParamMap) -> f64 + Send + Sync + 'static) -> Self {
        self.mode = Some(Arc::new(f));
        self
    }

    pub fn mle(
        mut self,
        f: impl Fn(&[f64], &Domain, &FitOptions) -> Result<ParamMap> + Send + Sync + 'static,
    ) -> Self {
        self.mle = Some(Arc::new(f));
        self
    }

    pub fn validate(
        mut self,
        f: impl Fn(&ParamMap) -> Vec<String> + Send + Sync + 'static,
    ) -> Self {
        self.validate = Some(Arc::new(f));
        self
    }

    pub fn emit_c(mut self, f: impl Fn(&ParamMap, &str) -> String + Send + Sync + 'static) -> Self {
        self.emit_c = Some(Arc::new(f));
        self
    }

    pub fn random_params(
        mut self,
        f: impl Fn(&Domain, &mut RandomSource) -> ParamMap + Send + Sync + 'static,
    ) -> Self {
        self.random_params = Some(Arc::new(f));
        self
    }

    pub fn free_params(mut self, f: impl Fn(&ParamMap) -> usize + Send + Sync + 'static) -> Self {
        self.free_params = Some(Arc::new(f));
        self
    }

    fn build(self) -> Result<LeafFamily> {
        fn require<T>(opt: Option<T>, name: &str, what: &str) -> Result<T> {
            opt.ok_or_else(|| {
                Error::Construction(format!("family '{name}' is missing the {what} handler"))
            })
        }
        Ok(LeafFamily {
            log_density: require(self.log_density, &self.name, "log-density")?,
            sample: require(self.sample, &self.name, "sampler")?,
            mode: require(self.mode, &self.name, "mode")?,
            mle: require(self.mle, &self.name, "MLE")?,
            validate: require(self.validate, &self.name, "validator")?,
            emit_c: self.emit_c,
            random_params: self.random_params,
            free_params: self.free_params,
            name: self.name,
            display: self.display,
            param_names: self.param_names,
        })
    }
}

/// Dense handle to a family inside one registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilyId(pub(crate) usize);

impl FamilyId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Name-indexed store of leaf families.
///
/// Written once at startup, then shared read-only behind an `Arc`.
#[derive(Debug, Default)]
pub struct FamilyRegistry {
    families: Vec<LeafFamily>,
    by_name: HashMap<String, usize>,
}

impl FamilyRegistry {
    /// Registry with no families; custom setups start here.
    pub fn empty() -> Self {
        FamilyRegistry::default()
    }

    /// Registry with the core discrete/continuous families
    /// (`categorical`, `gaussian`) but no extensions.
    pub fn base() -> Self {
        let mut reg = FamilyRegistry::empty();
        reg.register(categorical_descriptor()).expect("categorical registers");
        reg.register(gaussian_descriptor()).expect("gaussian registers");
        reg
    }

    /// Registry with every built-in family: `categorical`, `gaussian`
    /// and `pareto` (the latter registered through the same extension
    /// path available to user-defined families).
    pub fn with_builtins() -> Self {
        let mut reg = FamilyRegistry::base();
        reg.register(pareto_descriptor()).expect("pareto registers");
        reg
    }

    /// Register a family. Names are unique case-insensitively and all
    /// five core handlers must be present.
    pub fn register(&mut self, descriptor: FamilyDescriptor) -> Result<FamilyId> {
        let key = descriptor.name.clone();
        if self.by_name.contains_key(&key) {
            return Err(Error::Construction(format!(
                "leaf family '{key}' is already registered"
            )));
        }
        let family = descriptor.build()?;
        let id = self.families.len();
        self.by_name.insert(key, id);
        self.families.push(family);
        Ok(FamilyId(id))
    }

    /// Case-insensitive lookup.
    pub fn lookup(&self, name: &str) -> Option<FamilyId> {
        self.by_name.get(&name.to_lowercase()).copied().map(FamilyId)
    }

    pub fn get(&self, id: FamilyId) -> &LeafFamily {
        &self.families[id.0]
    }

    pub fn by_name(&self, name: &str) -> Result<&LeafFamily> {
        self.lookup(name)
            .map(|id| self.get(id))
            .ok_or_else(|| Error::Construction(format!("unknown leaf family '{name}'")))
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }
}

fn fmt_c(value: f64) -> String {
    if value == f64::NEG_INFINITY {
        "-INFINITY".to_string()
    } else {
        format!("{value:.16e}")
    }
}

/// Categorical over values 0..k-1 with explicit pmf vector `p`.
pub fn categorical_descriptor() -> FamilyDescriptor {
    FamilyDescriptor::new("categorical")
        .display("Categorical")
        .params(&["p"])
        .log_density(|params, x| {
            let p = params.vector("p").expect("validated params");
            // NaN signals an out-of-domain value to the evaluator.
            if x < 0.0 || x.fract() != 0.0 || x as usize >= p.len() {
                return f64::NAN;
            }
            p[x as usize].ln()
        })
        .sample(|params, rng| {
            let p = params.vector("p").expect("validated params");
            let u = rng.uniform();
            let mut acc = 0.0;
            for (i, &pi) in p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    return i as f64;
                }
            }
            // float leftovers: last category with positive mass
            p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1) as f64
        })
        .mode(|params| {
            let p = params.vector("p").expect("validated params");
            let mut best = 0usize;
            for (i, &pi) in p.iter().enumerate() {
                if pi > p[best] {
                    best = i;
                }
            }
            best as f64
        })
        .mle(|values, domain, opts| {
            let k = match domain {
                Domain::Categorical { cardinality } => *cardinality,
                Domain::Numeric { .. } => {
                    return Err(Error::Data(
                        "categorical fit requires a categorical column domain".into(),
                    ))
                }
            };
            let mut counts = vec![0.0f64; k];
            for &v in values {
                if v < 0.0 || v.fract() != 0.0 || v as usize >= k {
                    return Err(Error::Data(format!(
                        "categorical fit: value {v} outside 0..{k}"
                    )));
                }
                counts[v as usize] += 1.0;
            }
            let n = values.len() as f64;
            let alpha = opts.laplace_alpha;
            let denom = n + alpha * k as f64;
            let p: Vec<f64> = counts.iter().map(|c| (c + alpha) / denom).collect();
            Ok(ParamMap::new().with_vector("p", p))
        })
        .validate(|params| {
            let mut out = Vec::new();
            match params.vector("p") {
                Some(p) => {
                    if p.is_empty() {
                        out.push("categorical pmf must be nonempty".into());
                    }
                    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        out.push("categorical pmf entries must be finite and nonnegative".into());
                    } else {
                        let sum: f64 = p.iter().sum();
                        if (sum - 1.0).abs() > 1e-6 {
                            out.push(format!("categorical pmf sums to {sum}, expected 1"));
                        }
                    }
                }
                None => out.push("categorical requires vector parameter 'p'".into()),
            }
            out
        })
        .emit_c(|params, input| {
            let p = params.vector("p").expect("validated params");
            // nested conditionals over the categories; anything else has
            // zero density in the emitted evaluator
            let mut expr = String::from("-INFINITY");
            for (i, &pi) in p.iter().enumerate().rev() {
                expr = format!("(({input} == {i}.0) ? {} : {expr})", fmt_c(pi.ln()));
            }
            expr
        })
        .random_params(|domain, _rng| {
            let k = match domain {
                Domain::Categorical { cardinality } => *cardinality,
                Domain::Numeric { .. } => 2,
            };
            ParamMap::new().with_vector("p", vec![1.0 / k as f64; k])
        })
        .free_params(|params| {
            params.vector("p").map(|p| p.len().saturating_sub(1)).unwrap_or(0)
        })
}

/// Gaussian with parameters `mean` and `stdev` (standard deviation).
pub fn gaussian_descriptor() -> FamilyDescriptor {
    FamilyDescriptor::new("gaussian")
        .display("Gaussian")
        .params(&["mean", "stdev"])
        .log_density(|params, x| {
            let mean = params.scalar("mean").expect("validated params");
            let std = params.scalar("stdev").expect("validated params");
            let z = (x - mean) / std;
            -0.5 * z * z - std.ln() - 0.5 * LN_2PI
        })
        .sample(|params, rng| {
            let mean = params.scalar("mean").expect("validated params");
            let std = params.scalar("stdev").expect("validated params");
            mean + std * rng.normal()
        })
        .mode(|params| params.scalar("mean").expect("validated params"))
        .mle(|values, _domain, opts| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt().max(opts.std_floor);
            Ok(ParamMap::new()
                .with_scalar("mean", mean)
                .with_scalar("stdev", std))
        })
        .validate(|params| {
            let mut out = Vec::new();
            match params.scalar("mean") {
                Some(m) if m.is_finite() => {}
                _ => out.push("gaussian requires finite scalar 'mean'".into()),
            }
            match params.scalar("stdev") {
                Some(s) if s.is_finite() && s >= 1e-6 => {}
                Some(s) => out.push(format!("gaussian stdev {s} below floor 1e-6")),
                None => out.push("gaussian requires scalar 'stdev'".into()),
            }
            out
        })
        .emit_c(|params, input| {
            let mean = params.scalar("mean").expect("validated params");
            let std = params.scalar("stdev").expect("validated params");
            format!(
                "(-0.5 * (({input} - {m}) / {s}) * (({input} - {m}) / {s}) - {k})",
                m = fmt_c(mean),
                s = fmt_c(std),
                k = fmt_c(std.ln() + 0.5 * LN_2PI),
            )
        })
        .random_params(|domain, rng| {
            let (lo, hi) = match domain {
                Domain::Numeric { lo, hi } => (*lo, *hi),
                Domain::Categorical { cardinality } => (0.0, (*cardinality - 1) as f64),
            };
            let mean = lo + rng.uniform() * (hi - lo);
            ParamMap::new()
                .with_scalar("mean", mean)
                .with_scalar("stdev", 1.0)
        })
        .free_params(|_| 2)
}

/// Pareto with shape `a`, scale fixed at 1, support x >= 1:
/// density a * x^-(a+1).
pub fn pareto_descriptor() -> FamilyDescriptor {
    FamilyDescriptor::new("pareto")
        .display("Pareto")
        .params(&["a"])
        .log_density(|params, x| {
            let a = params.scalar("a").expect("validated params");
            if x < 1.0 {
                return f64::NEG_INFINITY;
            }
            a.ln() - (a + 1.0) * x.ln()
        })
        .sample(|params, rng| {
            let a = params.scalar("a").expect("validated params");
            // inverse CDF: x = (1 - u)^(-1/a)
            (1.0 - rng.uniform()).powf(-1.0 / a)
        })
        .mode(|_| 1.0)
        .mle(|values, _domain, _opts| {
            if values.iter().any(|&v| v < 1.0) {
                return Err(Error::Data(
                    "pareto fit requires all values >= 1".into(),
                ));
            }
            let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
            if log_sum <= 0.0 {
                return Err(Error::Data(
                    "pareto fit undefined when all values equal 1".into(),
                ));
            }
            let a = values.len() as f64 / log_sum;
            Ok(ParamMap::new().with_scalar("a", a))
        })
        .validate(|params| {
            let mut out = Vec::new();
            match params.scalar("a") {
                Some(a) if a.is_finite() && a > 0.0 => {}
                Some(a) => out.push(format!("pareto shape {a} must be positive")),
                None => out.push("pareto requires scalar 'a'".into()),
            }
            out
        })
        .emit_c(|params, input| {
            let a = params.scalar("a").expect("validated params");
            format!(
                "(({input} >= 1.0) ? ({} - {} * log({input})) : -INFINITY)",
                fmt_c(a.ln()),
                fmt_c(a + 1.0),
            )
        })
        .random_params(|_domain, rng| {
            ParamMap::new().with_scalar("a", 1.0 + 2.0 * rng.uniform())
        })
        .free_params(|_| 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(p: Vec<f64>) -> ParamMap {
        ParamMap::new().with_vector("p", p)
    }

    #[test]
    fn categorical_density_and_domain() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("categorical").unwrap();
        let params = cat(vec![0.2, 0.8]);
        assert!((f.log_density(&params, 1.0) - 0.8f64.ln()).abs() < 1e-15);
        assert!(f.log_density(&params, 2.0).is_nan());
        assert!(f.log_density(&params, 0.5).is_nan());
        assert!(f.log_density(&params, -1.0).is_nan());
    }

    #[test]
    fn categorical_validation() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("categorical").unwrap();
        assert!(f.validate(&cat(vec![0.2, 0.8])).is_empty());
        assert!(!f.validate(&cat(vec![0.5, 0.6])).is_empty());
        assert!(!f.validate(&cat(vec![-0.1, 1.1])).is_empty());
        // length-1 pmf is a legal degenerate distribution
        assert!(f.validate(&cat(vec![1.0])).is_empty());
    }

    #[test]
    fn categorical_mode_breaks_ties_low() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("categorical").unwrap();
        assert_eq!(f.mode(&cat(vec![0.5, 0.5])), 0.0);
        assert_eq!(f.mode(&cat(vec![0.3, 0.7])), 1.0);
    }

    #[test]
    fn degenerate_categorical_always_samples_zero() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("categorical").unwrap();
        let params = cat(vec![1.0, 0.0]);
        let mut rng = RandomSource::new(5);
        for _ in 0..100 {
            assert_eq!(f.sample(&params, &mut rng), 0.0);
        }
    }

    #[test]
    fn gaussian_density_matches_closed_form() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("gaussian").unwrap();
        let params = ParamMap::new().with_scalar("mean", 0.0).with_scalar("stdev", 1.0);
        let expect = -0.5 * LN_2PI;
        assert!((f.log_density(&params, 0.0) - expect).abs() < 1e-15);
        assert_eq!(f.mode(&params), 0.0);
    }

    #[test]
    fn gaussian_sample_mean_converges() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("gaussian").unwrap();
        let params = ParamMap::new().with_scalar("mean", 5.0).with_scalar("stdev", 1.0);
        let mut rng = RandomSource::new(11);
        let n = 100_000;
        let mean = (0..n).map(|_| f.sample(&params, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 5.0).abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn pareto_support_and_density() {
        let reg = FamilyRegistry::with_builtins();
        let f = reg.by_name("pareto").unwrap();
        let params = ParamMap::new().with_scalar("a", 2.0);
        // a * x^-(a+1) at 1.5 with a=2 is 16/27
        let expect = (16.0f64 / 27.0).ln();
        assert!((f.log_density(&params, 1.5) - expect).abs() < 1e-12);
        assert_eq!(f.log_density(&params, 0.5), f64::NEG_INFINITY);
        assert_eq!(f.mode(&params), 1.0);
        let mut rng = RandomSource::new(9);
        for _ in 0..1000 {
            assert!(f.sample(&params, &mut rng) >= 1.0);
        }
    }

    #[test]
    fn mle_handlers() {
        let reg = FamilyRegistry::with_builtins();
        let opts = FitOptions {
            laplace_alpha: 0.0,
            std_floor: 1e-6,
        };
        let cat_fit = reg
            .by_name("categorical")
            .unwrap()
            .mle(
                &[0.0, 0.0, 1.0, 1.0],
                &Domain::Categorical { cardinality: 2 },
                &opts,
            )
            .unwrap();
        assert_eq!(cat_fit.vector("p").unwrap(), &[0.5, 0.5]);

        let gauss_fit = reg
            .by_name("gaussian")
            .unwrap()
            .mle(
                &[5.0, 5.0, 5.0],
                &Domain::Numeric { lo: 0.0, hi: 10.0 },
                &opts,
            )
            .unwrap();
        assert_eq!(gauss_fit.scalar("mean").unwrap(), 5.0);
        assert_eq!(gauss_fit.scalar("stdev").unwrap(), 1e-6);

        let e = std::f64::consts::E;
        let pareto_fit = reg
            .by_name("pareto")
            .unwrap()
            .mle(&[e, e, e], &Domain::Numeric { lo: 1.0, hi: 10.0 }, &opts)
            .unwrap();
        assert!((pareto_fit.scalar("a").unwrap() - 1.0).abs() < 1e-12);

        let err = reg
            .by_name("pareto")
            .unwrap()
            .mle(&[0.5, 2.0], &Domain::Numeric { lo: 0.0, hi: 2.0 }, &opts)
            .unwrap_err();
        assert!(err.to_string().contains(">= 1"));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut reg = FamilyRegistry::with_builtins();
        let err = reg.register(FamilyDescriptor::new("categorical")).unwrap_err();
        assert!(err.to_string().contains("already registered"));
        // case-insensitive
        let err = reg.register(FamilyDescriptor::new("Categorical")).unwrap_err();
        assert!(err.to_string().contains("already registered"));
    }

    #[test]
    fn missing_handler_rejected() {
        let mut reg = FamilyRegistry::empty();
        let descriptor = FamilyDescriptor::new("half")
            .params(&["w"])
            .log_density(|_, _| 0.0)
            .mode(|_| 0.0)
            .mle(|_, _, _| Ok(ParamMap::new()))
            .validate(|_| Vec::new());
        let err = reg.register(descriptor).unwrap_err();
        assert!(err.to_string().contains("sampler"));
    }

    /// Adaptive Simpson quadrature for the normalization checks.
    fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (lo + hi);
        let (fa, fm, fb) = (f(lo), f(m), f(hi));
        let whole = simpson(lo, hi, fa, fm, fb);
        recurse(f, lo, hi, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn builtin_densities_normalize() {
        let reg = FamilyRegistry::with_builtins();

        let cat = reg.by_name("categorical").unwrap();
        let p = ParamMap::new().with_vector("p", vec![0.2, 0.3, 0.5]);
        let total: f64 = (0..3).map(|v| cat.log_density(&p, v as f64).exp()).sum();
        assert!((total - 1.0).abs() < 1e-15);

        let gauss = reg.by_name("gaussian").unwrap();
        let gp = ParamMap::new().with_scalar("mean", 2.0).with_scalar("stdev", 1.5);
        let density = |x: f64| gauss.log_density(&gp, x).exp();
        let mass = integrate(&density, 2.0 - 15.0, 2.0 + 15.0, 1e-9);
        assert!((mass - 1.0).abs() < 1e-6, "gaussian mass {mass}");

        let pareto = reg.by_name("pareto").unwrap();
        for a in [1.5, 2.0, 3.0] {
            let pp = ParamMap::new().with_scalar("a", a);
            let density = |x: f64| pareto.log_density(&pp, x).exp();
            // integrate to where the analytic tail drops below 1e-8
            let hi = 1e-8f64.powf(-1.0 / a);
            let mass = integrate(&density, 1.0, hi, 1e-9);
            assert!((mass - 1.0).abs() < 1e-6, "pareto({a}) mass {mass}");
        }
    }
}
