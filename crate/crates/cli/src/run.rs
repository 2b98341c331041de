//! Task dispatch: builds the orbits a task needs, calls into the core
//! kernels, and packs the results into a [`Report`].

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use cubelab_core::cube_averages::{
    cube3_fast, cube3_naive, cube7_fast, cube7_naive, trace, Method,
};
use cubelab_core::cube_general::{cubek_fast, cubek_naive, lemma4_quantity, CubeSpec};
use cubelab_core::dynamics::{generate_orbit, Observable, Orbit};
use cubelab_core::factors::{eq10_compare, eq1_compare};
use cubelab_core::numeric::derive_seed;
use cubelab_core::spectral::{lemma2_check, lemma3_quantity, seminorm2, seminorm3, vdc_bound, ww_sup};

use crate::config::{ConfigError, ExperimentConfig, TaskKind};
use crate::report::{ColKind, Report};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("task {task}: {source}")]
    Task {
        task: TaskKind,
        #[source]
        source: cubelab_core::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Executes a validated configuration. Identical configurations (seed
/// included) produce identical numeric rows; parallel loops inside the core
/// reduce in fixed order, so the thread count cannot change a digit.
pub fn run(config: &ExperimentConfig) -> Result<Report, RunError> {
    let start = Instant::now();
    let task = config.task;
    let wrap = |e: cubelab_core::Error| RunError::Task { task, source: e };

    let (columns, rows, summary) = match task {
        TaskKind::Orbit => run_orbit(config, wrap)?,
        TaskKind::Avg | TaskKind::Trace => run_avg(config, wrap)?,
        TaskKind::Ww => run_ww(config, wrap)?,
        TaskKind::Seminorm => run_seminorm(config, wrap)?,
        TaskKind::Verify => run_verify(config, wrap)?,
    };

    Ok(Report {
        task: task_name(config),
        columns,
        rows,
        summary,
        seed: config.seed,
        config_echo: serde_json::to_string(config).unwrap_or_else(|_| "{}".into()),
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

fn task_name(config: &ExperimentConfig) -> String {
    match config.task {
        TaskKind::Verify => format!(
            "verify {}",
            config.get_str("check").unwrap_or("?")
        ),
        other => other.to_string(),
    }
}

type TaskOutput = (Vec<(&'static str, ColKind)>, Vec<Vec<f64>>, String);

/// Observable for role `i`, cycling the configured list.
fn role_observable(config: &ExperimentConfig, i: usize) -> &Observable {
    &config.observables[i % config.observables.len()].observable
}

fn role_orbit(
    config: &ExperimentConfig,
    i: usize,
    len: usize,
) -> cubelab_core::Result<Orbit> {
    generate_orbit(
        &config.system,
        role_observable(config, i),
        config.start_point(),
        len,
    )
}

fn run_orbit(
    config: &ExperimentConfig,
    wrap: impl Fn(cubelab_core::Error) -> RunError,
) -> Result<TaskOutput, RunError> {
    let l = config.get_usize("L")?;
    let orbit = role_orbit(config, 0, l).map_err(&wrap)?;
    let rows: Vec<Vec<f64>> = orbit
        .samples()
        .iter()
        .enumerate()
        .map(|(n, z)| vec![n as f64, z.re, z.im])
        .collect();
    let summary = format!(
        "orbit {} L={} supNorm={:.6}",
        config.system,
        l,
        orbit.sup_norm()
    );
    Ok((
        vec![
            ("n", ColKind::Int),
            ("re", ColKind::Float),
            ("im", ColKind::Float),
        ],
        rows,
        summary,
    ))
}

fn avg_orbits(
    config: &ExperimentConfig,
    k: u32,
    max_n: usize,
) -> cubelab_core::Result<Vec<Orbit>> {
    (1..(1usize << k))
        .map(|j| role_orbit(config, j - 1, CubeSpec::required_len(j, max_n)))
        .collect()
}

fn eval_single(
    orbits: &[&Orbit],
    k: u32,
    n: usize,
    method: Method,
) -> cubelab_core::Result<Complex64> {
    match (k, method) {
        (2, Method::Naive) => cube3_naive(orbits[0], orbits[1], orbits[2], n),
        (2, Method::Fast) => cube3_fast(orbits[0], orbits[1], orbits[2], n),
        (3, m) => {
            let f = [
                orbits[0], orbits[1], orbits[2], orbits[3], orbits[4], orbits[5], orbits[6],
            ];
            match m {
                Method::Naive => cube7_naive(&f, n),
                Method::Fast => cube7_fast(&f, n),
            }
        }
        (_, m) => {
            let spec = CubeSpec::new(k, orbits.to_vec())?;
            match m {
                Method::Naive => cubek_naive(&spec, n),
                Method::Fast => cubek_fast(&spec, n),
            }
        }
    }
}

fn run_avg(
    config: &ExperimentConfig,
    wrap: impl Fn(cubelab_core::Error) -> RunError,
) -> Result<TaskOutput, RunError> {
    let k = config.get_usize("k")? as u32;
    let horizons = config.horizons()?;

    if let Some(horizons) = horizons {
        let max_n = *horizons.iter().max().unwrap();
        let orbits = avg_orbits(config, k, max_n).map_err(&wrap)?;
        let refs: Vec<&Orbit> = orbits.iter().collect();
        let t = trace(&refs, &horizons).map_err(&wrap)?;
        let rows: Vec<Vec<f64>> = t
            .horizons
            .iter()
            .zip(t.values.iter())
            .map(|(&n, v)| vec![n as f64, v.re, v.im, v.norm()])
            .collect();
        let (first, last) = t.endpoints();
        let summary = format!(
            "trace k={k} over {} horizons: |M| {first:.6e} -> {last:.6e}, decayed={}",
            t.horizons.len(),
            t.has_decayed()
        );
        return Ok((
            vec![
                ("N", ColKind::Int),
                ("re", ColKind::Float),
                ("im", ColKind::Float),
                ("abs", ColKind::Float),
            ],
            rows,
            summary,
        ));
    }

    let n = config.get_usize("N")?;
    let method = config.get_str_or("method", "fast")?;
    let orbits = avg_orbits(config, k, n).map_err(&wrap)?;
    let refs: Vec<&Orbit> = orbits.iter().collect();
    let methods: Vec<(f64, Method)> = match method {
        "naive" => vec![(0.0, Method::Naive)],
        "fast" => vec![(1.0, Method::Fast)],
        _ => vec![(0.0, Method::Naive), (1.0, Method::Fast)],
    };
    let mut rows = Vec::new();
    let mut summary_parts = Vec::new();
    for (flag, m) in methods {
        let v = eval_single(&refs, k, n, m).map_err(&wrap)?;
        rows.push(vec![n as f64, flag, v.re, v.im, v.norm()]);
        summary_parts.push(format!("{m}={:.10e}{:+.10e}i", v.re, v.im));
    }
    let summary = format!("avg k={k} N={n}: {}", summary_parts.join(", "));
    Ok((
        vec![
            ("N", ColKind::Int),
            ("method", ColKind::Int),
            ("re", ColKind::Float),
            ("im", ColKind::Float),
            ("abs", ColKind::Float),
        ],
        rows,
        summary,
    ))
}

fn run_ww(
    config: &ExperimentConfig,
    wrap: impl Fn(cubelab_core::Error) -> RunError,
) -> Result<TaskOutput, RunError> {
    let n = config.get_usize("N")?;
    let oversample = config.get_usize_or("oversample", 8)?;
    let orbit = role_orbit(config, 0, n).map_err(&wrap)?;
    let w = ww_sup(&orbit, n, oversample).map_err(&wrap)?;
    let summary = format!(
        "ww N={n} oversample={oversample}: sup={:.10e} at t={:.10}",
        w.value, w.argmax_t
    );
    Ok((
        vec![
            ("N", ColKind::Int),
            ("oversample", ColKind::Int),
            ("value", ColKind::Float),
            ("argmaxT", ColKind::Float),
        ],
        vec![vec![n as f64, oversample as f64, w.value, w.argmax_t]],
        summary,
    ))
}

fn run_seminorm(
    config: &ExperimentConfig,
    wrap: impl Fn(cubelab_core::Error) -> RunError,
) -> Result<TaskOutput, RunError> {
    let order = config.get_usize("order")?;
    let n = config.get_usize("N")?;
    let h = config.get_usize("H")?;
    let h_inner = config.get_usize_or("Hinner", h)?;
    let estimate = if order == 2 {
        let orbit = role_orbit(config, 0, n + h).map_err(&wrap)?;
        seminorm2(&orbit, n, h).map_err(&wrap)?
    } else {
        let orbit = role_orbit(config, 0, n + h + h_inner).map_err(&wrap)?;
        seminorm3(&orbit, n, h, h_inner).map_err(&wrap)?
    };
    let summary = format!(
        "seminorm order={order} N={n} H={h}: value={:.10e}",
        estimate.value
    );
    Ok((
        vec![
            ("order", ColKind::Int),
            ("N", ColKind::Int),
            ("H", ColKind::Int),
            ("Hinner", ColKind::Int),
            ("value", ColKind::Float),
        ],
        vec![vec![
            order as f64,
            n as f64,
            h as f64,
            estimate.h_inner.unwrap_or(0) as f64,
            estimate.value,
        ]],
        summary,
    ))
}

fn run_verify(
    config: &ExperimentConfig,
    wrap: impl Fn(cubelab_core::Error) -> RunError,
) -> Result<TaskOutput, RunError> {
    let check = config.get_str("check")?;
    match check {
        "vdc" => {
            let trials = config.get_usize("trials")?;
            let n = config.get_usize("N")?;
            let h = config.get_usize("H")?;
            let mut rows = Vec::with_capacity(trials);
            let mut ok_count = 0usize;
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, trial as u64));
                let u: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let (lhs, rhs) = vdc_bound(&u, n, h).map_err(&wrap)?;
                let ok = lhs <= rhs;
                ok_count += ok as usize;
                rows.push(vec![trial as f64, lhs, rhs, ok as usize as f64]);
            }
            let summary = format!("verify vdc: {ok_count}/{trials} trials satisfy lhs <= rhs");
            Ok((
                vec![
                    ("trial", ColKind::Int),
                    ("lhs", ColKind::Float),
                    ("rhs", ColKind::Float),
                    ("ok", ColKind::Int),
                ],
                rows,
                summary,
            ))
        }
        "lemma2" => {
            let n = config.get_usize("N")?;
            let h = config.get_usize("H")?;
            let orbit = role_orbit(config, 0, n + h).map_err(&wrap)?;
            let (lhs, rhs) = lemma2_check(&orbit, n, h).map_err(&wrap)?;
            let violation = lhs > rhs;
            let summary = format!(
                "verify lemma2 N={n} H={h}: lhs={lhs:.6e} rhs={rhs:.6e}{}",
                if violation { " [VIOLATION]" } else { "" }
            );
            Ok((
                vec![
                    ("N", ColKind::Int),
                    ("H", ColKind::Int),
                    ("lhs", ColKind::Float),
                    ("rhs", ColKind::Float),
                    ("violation", ColKind::Int),
                ],
                vec![vec![n as f64, h as f64, lhs, rhs, violation as usize as f64]],
                summary,
            ))
        }
        "lemma3" => {
            let n = config.get_usize("N")?;
            let oversample = config.get_usize_or("oversample", 8)?;
            let a = role_orbit(config, 0, 2 * n - 1).map_err(&wrap)?;
            let b = role_orbit(config, 1, 2 * n - 1).map_err(&wrap)?;
            let value = lemma3_quantity(&a, &b, n, oversample).map_err(&wrap)?;
            let summary = format!("verify lemma3 N={n}: value={value:.10e}");
            Ok((
                vec![
                    ("N", ColKind::Int),
                    ("oversample", ColKind::Int),
                    ("value", ColKind::Float),
                ],
                vec![vec![n as f64, oversample as f64, value]],
                summary,
            ))
        }
        "lemma4" => {
            let k = config.get_usize("k")?;
            let n = config.get_usize("N")?;
            let oversample = config.get_usize_or("oversample", 8)?;
            let block_size = 1usize << (k - 2);
            let orbits: Vec<Orbit> = (0..block_size)
                .map(|j| {
                    let len = ((j as u32).count_ones() as usize + 1) * (n - 1) + 1;
                    role_orbit(config, j, len)
                })
                .collect::<cubelab_core::Result<_>>()
                .map_err(&wrap)?;
            let refs: Vec<&Orbit> = orbits.iter().collect();
            let value = lemma4_quantity(&refs, n, oversample).map_err(&wrap)?;
            let summary = format!("verify lemma4 k={k} N={n}: value={value:.10e}");
            Ok((
                vec![("N", ColKind::Int), ("value", ColKind::Float)],
                vec![vec![n as f64, value]],
                summary,
            ))
        }
        "eq1" => {
            let n = config.get_usize("N")?;
            let (raw, projected) = eq1_compare(
                &config.system,
                config.start_point(),
                role_observable(config, 0),
                role_observable(config, 1),
                n,
            )
            .map_err(&wrap)?;
            let summary =
                format!("verify eq1 N={n}: raw={raw:.10e} projected={projected:.10e}");
            Ok((
                vec![
                    ("N", ColKind::Int),
                    ("raw", ColKind::Float),
                    ("projected", ColKind::Float),
                ],
                vec![vec![n as f64, raw, projected]],
                summary,
            ))
        }
        "eq10" => {
            let n = config.get_usize("N")?;
            let (raw, projected) = eq10_compare(
                &config.system,
                config.start_point(),
                &[
                    role_observable(config, 0),
                    role_observable(config, 1),
                    role_observable(config, 2),
                    role_observable(config, 3),
                ],
                n,
            )
            .map_err(&wrap)?;
            let summary =
                format!("verify eq10 N={n}: raw={raw:.10e} projected={projected:.10e}");
            Ok((
                vec![
                    ("N", ColKind::Int),
                    ("raw", ColKind::Float),
                    ("projected", ColKind::Float),
                ],
                vec![vec![n as f64, raw, projected]],
                summary,
            ))
        }
        other => Err(ConfigError::Parameter {
            key: "check",
            reason: format!("unknown check `{other}`"),
        }
        .into()),
    }
}
