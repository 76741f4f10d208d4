//! Runs the selected stages in order and collects the report and artifacts.

use std::collections::BTreeMap;

use isojet::characteristics::{
    conoid_sample, conormal_determinant, embedding_symbol, hamilton_flow, is_characteristic, is_nonexceptional,
    proportionality_factor, solve_hj_series, strips_csv, ConoidOptions, Exceptionality, FlowOptions, Hamiltonian,
    PrincipalSymbol,
};
use isojet::embedding::{
    augmentation_rows, build_nonsingular_data, build_singular_data, cartan_janet_dim, embed_cartan_janet,
    singular_ambient_dim, singular_metric_order, solve_at_base_points, CartanJanetOptions, SingularData,
    SingularOptions,
};
use isojet::io::{float_json, jet_json, scalar_json, MetricInput};
use isojet::metric::{check_admissible, normal_form_transform, positivity_certificate, AdmissibleMetric, MetricJet};
use isojet::par::with_jobs;
use isojet::verify::{constraint_residual, equivalence_check, singular_rank_certificate, tolerance_for};
use isojet::{Error, ExecPolicy, Jet, Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::plan::{metric_order, Stage};

/// Relative bound for the Euler identity `p·∂_p g = m g` at sampled points.
const EULER_TOL: f64 = 1e-10;
const EULER_SAMPLES: usize = 50;
/// Order to which the restricted system determinant is compared with `Δ`.
const SYMBOL_CHECK_ORDER: usize = 4;

#[derive(Clone, Debug)]
pub struct Config {
    pub stages: Vec<Stage>,
    pub k: usize,
    pub eps: Rational,
    pub points: Vec<Vec<f64>>,
    pub step: f64,
    pub trust_radius: f64,
    pub jobs: Option<usize>,
    pub seed: u64,
}

pub struct Outcome {
    pub report: Value,
    /// File name to contents.
    pub artifacts: BTreeMap<&'static str, String>,
    /// One JSON object per failure, for stderr.
    pub failures: Vec<Value>,
    pub exit_code: i32,
}

pub fn error_json(e: &Error) -> Value {
    let mut v = serde_json::to_value(e).unwrap_or_else(|_| json!({}));
    v["message"] = Value::String(e.to_string());
    v
}

struct SymbolSetup<C> {
    source: &'static str,
    symbol: PrincipalSymbol<C>,
    surface: Jet<C>,
    vertex: Vec<C>,
}

struct Run<'a, C> {
    input: &'a MetricInput,
    cfg: &'a Config,
    tol: f64,
    metric: Option<MetricJet<C>>,
    metric_changed: bool,
    admissible: Option<AdmissibleMetric<C>>,
    singular: Option<SingularData<C>>,
    symbol: Option<SymbolSetup<C>>,
    embedding: BTreeMap<String, Value>,
    artifacts: BTreeMap<&'static str, String>,
    failures: Vec<Value>,
    characteristic_failure: bool,
}

pub fn run<C: Scalar>(input: &MetricInput, cfg: &Config) -> Outcome {
    let mut r = Run::<C> {
        input,
        cfg,
        tol: 0.0,
        metric: None,
        metric_changed: false,
        admissible: None,
        singular: None,
        symbol: None,
        embedding: BTreeMap::new(),
        artifacts: BTreeMap::new(),
        failures: Vec::new(),
        characteristic_failure: false,
    };
    let mut stages = BTreeMap::new();
    if input.has_metric() && cfg.stages.iter().any(|s| s.needs_metric()) {
        match input.metric::<C>(metric_order(&cfg.stages, input.n, cfg.k)) {
            Ok(g) => {
                let scale = (0..g.dim())
                    .flat_map(|i| (0..g.dim()).map(move |j| (i, j)))
                    .map(|(i, j)| g.get(i, j).max_abs_coeff())
                    .fold(0.0, f64::max);
                r.tol = tolerance_for::<C>(scale);
                r.metric = Some(g);
            }
            Err(e) => r.fail("input", &e),
        }
    }
    let mut all_pass = r.failures.is_empty();
    for &stage in &cfg.stages {
        let entry = match r.stage(stage) {
            Ok(v) => v,
            Err(e) => {
                if e.is_characteristic() && matches!(stage, Stage::CartanJanet | Stage::SolvePoints) {
                    r.characteristic_failure = true;
                }
                r.fail(stage.name(), &e);
                json!({ "pass": false, "error": error_json(&e) })
            }
        };
        if entry["pass"] != Value::Bool(true) {
            all_pass = false;
            let reported = r.failures.iter().any(|f| f["stage"] == stage.name());
            if !reported {
                r.failures.push(json!({ "stage": stage.name(), "kind": "check_failed" }));
            }
        }
        stages.insert(stage.name().to_string(), entry);
    }
    let exit_code = if r.characteristic_failure {
        3
    } else if all_pass {
        0
    } else {
        1
    };
    let summary = summary(input, &stages, all_pass, exit_code);
    let report = json!({
        "input": {
            "n": input.n,
            "K": cfg.k,
            "mode": C::MODE.to_string(),
            "stages": cfg.stages.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "eps": cfg.eps.to_string(),
            "step": cfg.step,
            "trust_radius": cfg.trust_radius,
            "seed": cfg.seed,
        },
        "stages": stages,
        "summary": summary,
    });
    if !r.embedding.is_empty() {
        let text = serde_json::to_string_pretty(&r.embedding).expect("embedding serializes");
        r.artifacts.insert("embedding.json", text + "\n");
    }
    Outcome {
        report,
        artifacts: r.artifacts,
        failures: r.failures,
        exit_code,
    }
}

fn summary(input: &MetricInput, stages: &BTreeMap<String, Value>, pass: bool, exit_code: i32) -> Value {
    let n = input.n;
    let mut s = json!({
        "pass": pass,
        "exit_code": exit_code,
        "ambient_dimension_nonsingular": cartan_janet_dim(n),
        "ambient_dimension_singular": if n >= 2 { json!(singular_ambient_dim(n)) } else { Value::Null },
    });
    if let Some(sd) = stages.get(Stage::SingularData.name()) {
        s["delta0_at_origin"] = sd["delta0_at_origin"].clone();
        s["d1_delta_at_origin"] = sd["d1_delta_at_origin"].clone();
    }
    if let Some(ch) = stages.get(Stage::Characteristics.name()) {
        s["characteristic"] = ch["characteristic"].clone();
        s["certificate"] = ch["certificate"].clone();
    }
    s
}

impl<C: Scalar> Run<'_, C> {
    fn fail(&mut self, stage: &str, e: &Error) {
        self.failures.push(json!({ "stage": stage, "error": error_json(e) }));
    }

    fn stage(&mut self, stage: Stage) -> Result<Value, Error> {
        match stage {
            Stage::NormalForm => self.normal_form(),
            Stage::Admissibility => self.admissibility(),
            Stage::CartanJanet => self.cartan_janet(),
            Stage::SingularData => self.singular_data(),
            Stage::SolvePoints => self.solve_points(),
            Stage::Characteristics => self.characteristics(),
            Stage::Conoid => self.conoid(),
        }
    }

    fn metric(&self) -> Result<&MetricJet<C>, Error> {
        self.metric
            .as_ref()
            .ok_or_else(|| Error::Schema("no metric available for this stage".into()))
    }

    fn normal_form(&mut self) -> Result<Value, Error> {
        let g = self.metric()?;
        let positivity = positivity_certificate(g, 0.5, 9)?;
        if g.is_normal_form() {
            return Ok(json!({ "already_normal": true, "positivity": positivity, "pass": positivity.pass }));
        }
        let nf = normal_form_transform(g, C::from_ratio(1, 8), 6)?;
        let check = self.cfg.k - 1;
        if nf.metric.order() < check {
            return Err(Error::InsufficientOrder {
                what: "normal-form metric".into(),
                have: nf.metric.order(),
                need: check,
            });
        }
        let residual = nf
            .metric
            .cross_terms()
            .iter()
            .map(|b| b.truncate(check).max_abs_coeff())
            .fold(0.0, f64::max);
        let pass = residual <= self.tol && positivity.pass;
        let out = json!({
            "already_normal": false,
            "eps": scalar_json(&nf.eps),
            "attempts": nf.attempts,
            "order": check,
            "cross_terms_max_abs": residual,
            "displacement": nf.displacement.iter().map(jet_json).collect::<Vec<_>>(),
            "positivity": positivity,
            "pass": pass,
        });
        self.metric = Some(nf.metric);
        self.metric_changed = true;
        Ok(out)
    }

    fn admissibility(&mut self) -> Result<Value, Error> {
        let l = self.input.singular_exponent();
        match check_admissible(self.metric()?, l) {
            Ok(a) => {
                let out = json!({
                    "admissible": true,
                    "l": l,
                    "f0_at_origin": scalar_json(&a.f0.constant_term()),
                    "pass": true,
                });
                self.admissible = Some(a);
                Ok(out)
            }
            Err(Error::NotAdmissible(violations)) => Ok(json!({
                "admissible": false,
                "l": l,
                "violations": violations,
                "pass": false,
            })),
            Err(e) => Err(e),
        }
    }

    fn cartan_janet(&mut self) -> Result<Value, Error> {
        let g = self.metric()?;
        let k = self.cfg.k;
        let opts = CartanJanetOptions::default();
        let u = embed_cartan_janet(g, k, &opts)?;
        let isometry = equivalence_check(&u.components, g, self.tol);
        let mut out = json!({
            "ambient_dimension": u.ambient(),
            "order": k,
            "isometry": isometry,
        });
        let mut pass = isometry.pass;
        if g.dim() >= 2 {
            let data = build_nonsingular_data(g, k, &opts)?;
            let constraints = constraint_residual(&data, g, k - 1, self.tol)?;
            pass &= constraints.pass;
            out["constraints"] = json!(constraints);
        }
        out["pass"] = json!(pass);
        self.embedding.insert(
            "cartan_janet".into(),
            json!({ "ambient_dimension": u.ambient(), "components": u.components.iter().map(jet_json).collect::<Vec<_>>() }),
        );
        Ok(out)
    }

    fn singular_data(&mut self) -> Result<Value, Error> {
        let a = self
            .admissible
            .as_ref()
            .ok_or_else(|| Error::Schema("singular data needs an admissible metric".into()))?;
        let k = self.cfg.k;
        let opts = SingularOptions {
            eps: C::from_rational(&self.cfg.eps),
            ..SingularOptions::default()
        };
        let sd = build_singular_data(a, k, &opts)?;
        let constraints = constraint_residual(&sd.data, &a.metric, k, self.tol)?;
        let rank = singular_rank_certificate(&sd);
        let out = json!({
            "eps": scalar_json(sd.eps()),
            "attempts": sd.data.attempts,
            "ambient_dimension": singular_ambient_dim(a.dim()),
            "order": k,
            "delta": jet_json(&sd.delta),
            "delta0_at_origin": sd.delta0_at_origin().map_or(Value::Null, |c| scalar_json(&c)),
            "d1_delta_at_origin": scalar_json(&sd.d1_delta_at_base()),
            "rank": rank,
            "constraints": constraints,
            "frame": sd.frame,
            "pass": constraints.pass && rank.pass,
        });
        self.embedding.insert(
            "singular_data".into(),
            json!({
                "ambient_dimension": sd.data.ambient(),
                "u0": sd.data.u0.iter().map(jet_json).collect::<Vec<_>>(),
                "u1": sd.data.u1.iter().map(jet_json).collect::<Vec<_>>(),
            }),
        );
        self.singular = Some(sd);
        Ok(out)
    }

    fn solve_points(&mut self) -> Result<Value, Error> {
        let sd = self
            .singular
            .as_ref()
            .ok_or_else(|| Error::Schema("base-point solves need singular data".into()))?;
        let n = self.input.n;
        let k = self.cfg.k;
        // points are solved in float mode; an unchanged input metric is
        // re-expanded with headroom for recentering
        let g = if self.metric_changed {
            self.metric()?.to_f64()
        } else {
            self.input.metric::<f64>(singular_metric_order(n, k) + 4)?
        };
        let eps = sd.eps().to_f64();
        let opts = SingularOptions {
            eps,
            ..SingularOptions::default()
        };
        let points = self.cfg.points.clone();
        let results = with_jobs(self.cfg.jobs, || {
            solve_at_base_points(&g, &points, eps, k, &opts, ExecPolicy::Parallel)
        });
        let mut pass = true;
        let mut entries = Vec::new();
        let mut solved = Vec::new();
        for (point, res) in points.iter().zip(results) {
            match res {
                Ok(ps) => {
                    pass &= ps.residual.pass;
                    entries.push(json!({
                        "point": point,
                        "delta": float_json(ps.delta),
                        "residual": ps.residual,
                        "pass": ps.residual.pass,
                    }));
                    solved.push(json!({
                        "point": point,
                        "components": ps.embedding.components.iter().map(jet_json).collect::<Vec<_>>(),
                    }));
                }
                Err(e) => {
                    pass = false;
                    let characteristic = e.is_characteristic();
                    self.characteristic_failure |= characteristic;
                    self.failures.push(json!({
                        "stage": Stage::SolvePoints.name(),
                        "point": point,
                        "error": error_json(&e),
                    }));
                    entries.push(json!({
                        "point": point,
                        "characteristic": characteristic,
                        "error": error_json(&e),
                        "pass": false,
                    }));
                }
            }
        }
        self.embedding.insert("base_points".into(), Value::Array(solved));
        Ok(json!({ "mode": "float", "order": k, "points": entries, "pass": pass }))
    }

    fn symbol_setup(&self) -> Result<SymbolSetup<C>, Error> {
        if let Some(sd) = &self.singular {
            let n = self.input.n;
            return Ok(SymbolSetup {
                source: "embedding_system",
                symbol: embedding_symbol(&sd.data, &augmentation_rows(n))?,
                surface: Jet::var(n, self.cfg.k, n - 1),
                vertex: vec![C::zero(); n],
            });
        }
        let (symbol, surface, vertex) = self
            .input
            .symbol::<C>()?
            .ok_or_else(|| Error::Schema("characteristics need singular data or a scalar_symbol".into()))?;
        Ok(SymbolSetup {
            source: "scalar_symbol",
            symbol,
            surface,
            vertex,
        })
    }

    fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            step: self.cfg.step,
            ..FlowOptions::default()
        }
    }

    fn characteristics(&mut self) -> Result<Value, Error> {
        let setup = self.symbol_setup()?;
        let SymbolSetup {
            source,
            symbol,
            surface,
            vertex,
        } = &setup;
        let n = symbol.n();
        let test = is_characteristic(symbol, vertex, surface)?;
        let mut pass = test.characteristic;
        let certificate = if test.characteristic {
            match is_nonexceptional(symbol, vertex, surface)? {
                Exceptionality::NonExceptional { direction, derivative } => json!({
                    "non_exceptional": true,
                    "direction": direction.iter().map(scalar_json).collect::<Vec<_>>(),
                    "derivative": scalar_json(&derivative),
                }),
                Exceptionality::Inconclusive => json!({ "non_exceptional": false, "inconclusive": true }),
            }
        } else {
            Value::Null
        };
        let mut out = json!({
            "symbol_source": source,
            "degree": symbol.degree(),
            "vertex": vertex.iter().map(scalar_json).collect::<Vec<_>>(),
            "characteristic": test.characteristic,
            "value_at_vertex": scalar_json(&test.value),
            "certificate": certificate,
        });

        if let Some(sd) = &self.singular {
            let order = SYMBOL_CHECK_ORDER.min(sd.delta.order());
            let restricted = conormal_determinant(symbol, order)?;
            let factor = proportionality_factor(&restricted, &sd.delta, order);
            pass &= factor.is_some();
            out["frame_determinant_factor"] = json!({
                "order": order,
                "factor": factor.as_ref().map_or(Value::Null, scalar_json),
            });
        }

        if *source == "scalar_symbol" {
            let map = solve_hj_series(symbol, surface, self.cfg.k)?.with_trust_radius(self.cfg.trust_radius);
            let residual = map.residual(symbol)?.max_abs_coeff();
            let ok = residual <= self.tol;
            pass &= ok;
            out["phase"] = json!({
                "variables": "t, x1..xn",
                "order": map.order,
                "trust_radius": map.trust_radius,
                "xi": jet_json(&map.xi),
                "dt_xi": jet_json(&map.dt_xi),
                "residual_max_abs": residual,
                "pass": ok,
            });
        }

        let sym64 = symbol.to_f64();
        let vertex64: Vec<f64> = vertex.iter().map(Scalar::to_f64).collect();
        let s64 = surface.to_f64();
        let strip = hamilton_flow(&sym64, &vertex64, &s64, &self.flow_options())?;
        out["strip"] = json!({
            "stationary": strip.is_stationary(),
            "initial_speed": float_json(strip.initial_speed),
            "max_drift": float_json(strip.max_drift),
            "step": strip.step,
            "halvings": strip.halvings,
        });
        self.artifacts.insert("strips.csv", strips_csv(std::slice::from_ref(&strip), n));

        let euler = euler_check(&sym64, &vertex64, self.cfg.seed);
        pass &= euler <= EULER_TOL;
        out["euler_identity"] = json!({
            "samples": EULER_SAMPLES,
            "seed": self.cfg.seed,
            "max_rel_error": float_json(euler),
            "pass": euler <= EULER_TOL,
        });
        out["pass"] = json!(pass);
        self.symbol = Some(setup);
        Ok(out)
    }

    fn conoid(&mut self) -> Result<Value, Error> {
        let setup = self
            .symbol
            .as_ref()
            .ok_or_else(|| Error::Schema("conoid needs a characteristic analysis".into()))?;
        let n = setup.symbol.n();
        let vertex: Vec<f64> = setup.vertex.iter().map(Scalar::to_f64).collect();
        let opts = ConoidOptions {
            flow: self.flow_options(),
            ..ConoidOptions::default()
        };
        let sym = setup.symbol.to_f64();
        let s = setup.surface.to_f64();
        let cone = with_jobs(self.cfg.jobs, || conoid_sample(&sym, &vertex, &s, &opts, ExecPolicy::Parallel))?;
        let max_drift = cone.strips.iter().map(|s| s.max_drift).fold(0.0, f64::max);
        let extent: Vec<Value> = (0..n)
            .map(|i| {
                let m = cone
                    .strips
                    .iter()
                    .flat_map(|s| s.samples.iter().map(move |x| (x.x[i] - s.y[i]).abs()))
                    .fold(0.0, f64::max);
                float_json(m)
            })
            .collect();
        self.artifacts.insert("conoid.csv", strips_csv(&cone.strips, n));
        let pass = max_drift <= opts.flow.drift_tol;
        Ok(json!({
            "rays": opts.rays,
            "strips": cone.strips.len(),
            "stationary_strips": cone.strips.iter().filter(|s| s.is_stationary()).count(),
            "possibly_exceptional": cone.possibly_exceptional,
            "max_drift": float_json(max_drift),
            "displacement_max_abs": extent,
            "pass": pass,
        }))
    }
}

/// Largest relative violation of `p·∂_p g = m g` at random `(x, p)` near the vertex.
fn euler_check(symbol: &PrincipalSymbol<f64>, vertex: &[f64], seed: u64) -> f64 {
    let h = Hamiltonian::new(symbol);
    let n = symbol.n();
    let m = symbol.degree() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..EULER_SAMPLES {
        let x: Vec<f64> = vertex.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g, grad) = h.value_and_gradient(&x, &p);
        let euler: f64 = (0..n).map(|i| p[i] * grad[n + i]).sum();
        worst = worst.max((euler - m * g).abs() / (m * g).abs().max(1.0));
    }
    worst
}
