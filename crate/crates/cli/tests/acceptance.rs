//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensornet::{
    build_alternating, design, enumerate_blocks, evolve, fourier_extremal_positions, optimal_probe,
    optimal_probe_integer, parity_fisher, perp_decompose, probe_state, product_advantage_sweep,
    qfi_mixed, qfi_pure, sample_coefficients, statevector_oracle, twirl, BranchState,
    CoefficientMatrix, DesignProblem, EvolutionParams, GeneratingFunctionSet, SensorArray, C64,
};
use sensornet_cli::scenario::{bundled_examples, Resolved};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn taylor_problem(n: u32) -> (CoefficientMatrix, SensorArray, DesignProblem) {
    let array =
        SensorArray::on_line(&[-2.0, -1.0, 0.0, 1.0, 2.0], vec![n, 2 * n, 0, 2 * n, n]).unwrap();
    let f = sample_coefficients(
        &GeneratingFunctionSet::Taylor {
            length_scale: 1.0,
            count: 5,
        },
        &array,
    )
    .unwrap();
    let p = DesignProblem::for_array(f.clone(), &array, 3, [0, 1, 2, 4], false).unwrap();
    (f, array, p)
}

fn bundled() -> Vec<(String, Resolved)> {
    bundled_examples()
        .into_iter()
        .map(|sc| (sc.name.clone(), sc.resolve(None).unwrap()))
        .collect()
}

fn criterion_1() -> Outcome {
    let (_, _, p) = taylor_problem(1);
    let perp = perp_decompose(&p).map_err(|e| e.to_string())?;
    let a = &perp.f_perp;
    let b = [-1.0, 2.0, 0.0, -2.0, 1.0];
    // |a x b| generalized: norm of all 2x2 minors, relative to |a||b|.
    let mut wedge = 0.0;
    for i in 0..5 {
        for j in i + 1..5 {
            wedge += (a[i] * b[j] - a[j] * b[i]).powi(2);
        }
    }
    let residual = wedge.sqrt() / (dot(a, a).sqrt() * dot(&b, &b).sqrt());
    ensure(residual < 1e-9, || {
        format!("cross-product residual {residual:e}")
    })?;
    Ok(format!("f_perp = {a:?}, residual {residual:.1e}"))
}

fn criterion_2() -> Outcome {
    for n in 1..=3u32 {
        let (f, array, p) = taylor_problem(n);
        let pair = optimal_probe(&p).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let want: Vec<f64> = [-1.0, 2.0, 0.0, -2.0, 1.0].iter().map(|x| x * nf).collect();
        ensure(pair.s == want, || format!("n={n}: s* = {:?}", pair.s))?;
        let expected = (24.0 * nf).powi(2);
        let gap = dot(f.row(3), &pair.s) - dot(f.row(3), &pair.r);
        ensure(rel_close(gap * gap, expected, 1e-9), || {
            format!("n={n}: recomputed qfi {}", gap * gap)
        })?;
        ensure(rel_close(pair.qfi, expected, 1e-9), || {
            format!("n={n}: qfi {}", pair.qfi)
        })?;
        if n == 1 {
            let state = probe_state(&pair).unwrap();
            let o = statevector_oracle(
                array.qubit_counts(),
                &f,
                3,
                p.noise_indices(),
                &state,
                &EvolutionParams::zeros(5),
                1e-9,
            )
            .map_err(|e| e.to_string())?;
            ensure(
                rel_close(o.qfi, expected, 1e-9) && rel_close(o.twirled_qfi, expected, 1e-9),
                || format!("oracle qfi {} / {}", o.qfi, o.twirled_qfi),
            )?;
        }
    }
    Ok("s* = n(-1,2,0,-2,1), QFI = (24n)^2 for n = 1,2,3; 6-qubit statevector agrees".into())
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_literal = 0.0_f64;
    for k0 in 1..=8usize {
        let coords = fourier_extremal_positions(k0, 1.0).unwrap();
        let array = SensorArray::on_line(&coords, vec![1; k0]).unwrap();
        let f = sample_coefficients(
            &GeneratingFunctionSet::FourierSine {
                length_scale: 1.0,
                count: 40,
            },
            &array,
        )
        .unwrap();
        // Weights are the signal row at its antinodes, (+1, -1, +1, ...).
        let weights = f.row(k0 - 1).to_vec();
        for k in 1..=40usize {
            let expected = if k % k0 == 0 && (k / k0) % 2 == 1 {
                let m = (k / k0 - 1) / 2;
                if m % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            };
            let sum = dot(f.row(k - 1), &weights) / k0 as f64;
            worst = worst.max((sum - expected).abs());
            let literal: f64 = (1..=k0)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign / k0 as f64 * (PI * k as f64 / k0 as f64 * (j as f64 - 0.5)).sin()
                })
                .sum();
            worst_literal = worst_literal.max((literal + expected).abs());
        }
    }
    ensure(worst < 1e-9, || format!("max error {worst:e}"))?;
    ensure(worst_literal < 1e-9, || {
        format!("(-1)^j weighting off by {worst_literal:e}")
    })?;
    Ok(format!(
        "k0<=8, k<=40, max error {worst:.1e} (weights (+1,-1,...); (-1)^j weights give the negated table to {worst_literal:.1e})"
    ))
}

fn criterion_4() -> Outcome {
    let f = CoefficientMatrix::from_rows(vec![vec![0.7, 0.4, 0.2], vec![0.0, 0.0, 1.0]]).unwrap();
    let p = DesignProblem::new(f, 0, [1], vec![1.0; 3], true).unwrap();
    let pair = optimal_probe_integer(&p).map_err(|e| e.to_string())?;
    ensure(pair.s == [1.0, 1.0, 0.0], || format!("s* = {:?}", pair.s))?;
    let (_, ps) = bundled()
        .into_iter()
        .find(|(n, _)| n == "pointsource")
        .unwrap();
    let pair = design(&ps.problem).map_err(|e| e.to_string())?;
    ensure(pair.s == [1.0, 1.0, 0.0], || {
        format!("bundled s* = {:?}", pair.s)
    })?;
    Ok("s* = (1,1,0) for the (0,0,1) noise row and the bundled dipole scenario".into())
}

fn criterion_5() -> Outcome {
    let mut summaries = Vec::new();
    for j in [2usize, 4, 6, 8] {
        let c = enumerate_blocks(&build_alternating(j).unwrap()).map_err(|e| e.to_string())?;
        let pair: Vec<f64> = (0..j)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let neg: Vec<f64> = pair.iter().map(|x| -x).collect();
        let ok = c.dims.len() == 2
            && c.dims.get(&2) == Some(&1)
            && c.dims.get(&1) == Some(&((1 << j) - 2))
            && c.multi_blocks.len() == 1
            && c.multi_blocks[0].contains(&pair)
            && c.multi_blocks[0].contains(&neg);
        ensure(ok, || format!("J={j}: census {}", c.summary()))?;
        summaries.push(format!("J={j}: {}", c.summary()));
    }
    Ok(summaries.join(", "))
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for j in [2usize, 4, 6, 8] {
        let sc = build_alternating(j).unwrap();
        let report = product_advantage_sweep(&sc, 4096).map_err(|e| e.to_string())?;
        let bound = 0.5_f64.powi(j as i32 - 1);
        ensure(report.ratio <= bound + 1e-9, || {
            format!("J={j}: ratio {} > {bound}", report.ratio)
        })?;
        let uniform = sc.product_qfi(&vec![FRAC_PI_4; j]).unwrap() / report.optimal_qfi;
        ensure((uniform - bound).abs() <= 1e-6 * bound, || {
            format!("J={j}: uniform ratio {uniform} vs {bound}")
        })?;
        parts.push(format!(
            "J={j}: {:.6} over {} states",
            report.ratio, report.candidates
        ));
    }
    Ok(parts.join(", "))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut draws = 0;
    for (name, r) in bundled() {
        let pair = design(&r.problem).map_err(|e| e.to_string())?;
        let f = &r.coefficients;
        let noise: &BTreeSet<usize> = r.problem.noise_indices();
        let signal = r.problem.signal_index();
        let state = probe_state(&pair).unwrap();
        let base = twirl(&state, f, noise, 1e-9).unwrap();
        let (p0, q0) = (base.purity(), qfi_mixed(&base, f.row(signal)));
        for _ in 0..100 {
            let phases: Vec<f64> = (0..f.num_rows())
                .map(|k| {
                    if noise.contains(&k) {
                        rng.random_range(-PI..PI)
                    } else {
                        0.0
                    }
                })
                .collect();
            let evolved = evolve(&state, &EvolutionParams::new(phases).unwrap(), f).unwrap();
            let blocks = twirl(&evolved, f, noise, 1e-9).unwrap();
            let (p, q) = (blocks.purity(), qfi_mixed(&blocks, f.row(signal)));
            ensure((p - p0).abs() <= 1e-9 && rel_close(q, q0, 1e-9), || {
                format!("{name}: purity {p} vs {p0}, qfi {q} vs {q0}")
            })?;
            draws += 1;
        }
        ensure(
            rel_close(q0, pair.qfi, 1e-9) && (p0 - 1.0).abs() <= 1e-9,
            || format!("{name}: twirled probe qfi {q0}, purity {p0}"),
        )?;
    }
    Ok(format!(
        "{draws} noise draws over 3 scenarios, purity and QFI unchanged"
    ))
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    for (name, r) in bundled() {
        let pair = design(&r.problem).map_err(|e| e.to_string())?;
        for phi in [0.0, 0.013, 0.37, 1.1, 2.9] {
            let fi = parity_fisher(&pair, &r.coefficients, r.problem.signal_index(), phi)
                .map_err(|e| e.to_string())?;
            ensure(rel_close(fi, pair.qfi, 1e-9), || {
                format!("{name}: phi={phi} parity {fi} vs {}", pair.qfi)
            })?;
        }
        parts.push(format!("{name}: {}", pair.qfi));
    }
    Ok(parts.join(", "))
}

/// Random realizable integer scenario with at most `max_qubits` qubits.
struct IntCase {
    f: CoefficientMatrix,
    counts: Vec<u32>,
    noise: BTreeSet<usize>,
}

fn random_case(rng: &mut ChaCha8Rng, max_qubits: u32) -> IntCase {
    let j = rng.random_range(2..=5usize);
    let k = rng.random_range(2..=4usize);
    let mut counts: Vec<u32> = (0..j).map(|_| rng.random_range(0..=3)).collect();
    while counts.iter().sum::<u32>() > max_qubits {
        let i = rng.random_range(0..j);
        counts[i] = counts[i].saturating_sub(1);
    }
    let rows = (0..k)
        .map(|_| (0..j).map(|_| rng.random_range(-3..=3) as f64).collect())
        .collect();
    let noise = (1..k).filter(|_| rng.random_bool(0.6)).collect();
    IntCase {
        f: CoefficientMatrix::from_rows(rows).unwrap(),
        counts,
        noise,
    }
}

fn random_realizable(rng: &mut ChaCha8Rng, counts: &[u32]) -> Vec<f64> {
    counts
        .iter()
        .map(|&n| n as f64 - 2.0 * rng.random_range(0..=n) as f64)
        .collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut optimal_checked = 0;
    for case in 0..50 {
        let c = random_case(&mut rng, 10);
        let branches = rng.random_range(1..=6);
        let raw: Vec<(C64, Vec<f64>)> = (0..branches)
            .map(|_| {
                (
                    C64::from_polar(rng.random_range(0.1..1.0), rng.random_range(-PI..PI)),
                    random_realizable(&mut rng, &c.counts),
                )
            })
            .collect();
        let state = BranchState::normalized(raw).map_err(|e| e.to_string())?;
        let phases: Vec<f64> = (0..c.f.num_rows())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let params = EvolutionParams::new(phases).unwrap();
        compare_with_oracle(&c, &state, &params).map_err(|e| format!("case {case}: {e}"))?;

        // The designed integer probe too, whenever it fits the qubit registers.
        let bounds = c.counts.iter().map(|&n| n as f64).collect();
        let p = DesignProblem::new(c.f.clone(), 0, c.noise.clone(), bounds, true).unwrap();
        if let Ok(pair) = optimal_probe_integer(&p) {
            let realizable = pair
                .s
                .iter()
                .zip(&c.counts)
                .all(|(s, &n)| (s.abs() as u32 % 2) == n % 2);
            if realizable {
                compare_with_oracle(&c, &probe_state(&pair).unwrap(), &params)
                    .map_err(|e| format!("case {case} optimum: {e}"))?;
                optimal_checked += 1;
            }
        }
    }
    Ok(format!(
        "50 random states ({optimal_checked} designed probes as well) agree to 1e-9"
    ))
}

fn compare_with_oracle(
    c: &IntCase,
    state: &BranchState,
    params: &EvolutionParams,
) -> Result<(), String> {
    let evolved = evolve(state, params, &c.f).unwrap();
    let pure = qfi_pure(&evolved, c.f.row(0));
    let mixed = qfi_mixed(&twirl(&evolved, &c.f, &c.noise, 1e-9).unwrap(), c.f.row(0));
    let o = statevector_oracle(&c.counts, &c.f, 0, &c.noise, state, params, 1e-9)
        .map_err(|e| e.to_string())?;
    ensure(rel_close(pure, o.qfi, 1e-9), || {
        format!("pure {pure} vs {}", o.qfi)
    })?;
    ensure(rel_close(mixed, o.twirled_qfi, 1e-9), || {
        format!("twirled {mixed} vs {}", o.twirled_qfi)
    })
}

fn random_state(rng: &mut ChaCha8Rng, counts: &[u32]) -> Option<BranchState> {
    let branches = rng.random_range(1..=6);
    let raw = (0..branches)
        .map(|_| {
            let s = counts
                .iter()
                .map(|&n| rng.random_range(-(n as i32)..=n as i32) as f64)
                .collect();
            (
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                s,
            )
        })
        .collect();
    BranchState::normalized(raw).ok()
}

fn random_real_problem(rng: &mut ChaCha8Rng) -> DesignProblem {
    let j = rng.random_range(2..=5usize);
    let k = rng.random_range(2..=4usize);
    let rows = (0..k)
        .map(|_| (0..j).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let bounds = (0..j).map(|_| rng.random_range(0.0..3.0)).collect();
    let noise: Vec<usize> = (1..k).filter(|_| rng.random_bool(0.6)).collect();
    DesignProblem::new(
        CoefficientMatrix::from_rows(rows).unwrap(),
        0,
        noise,
        bounds,
        false,
    )
    .unwrap()
}

const PROPERTY_CASES: usize = 256;

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut counts = [0usize; 5];

    // Normalization, twirl idempotence and data processing on random states.
    while counts[0] < PROPERTY_CASES {
        let c = random_case(&mut rng, 8);
        let Some(state) = random_state(&mut rng, &c.counts) else {
            continue;
        };
        let phases: Vec<f64> = (0..c.f.num_rows())
            .map(|_| rng.random_range(-PI..PI))
            .collect();
        let evolved = evolve(&state, &EvolutionParams::new(phases).unwrap(), &c.f).unwrap();
        let blocks = twirl(&evolved, &c.f, &c.noise, 1e-9).unwrap();
        ensure((evolved.norm_sqr() - 1.0).abs() < 1e-12, || {
            "evolution changed the norm".into()
        })?;
        ensure((blocks.total_weight() - 1.0).abs() < 1e-12, || {
            "twirl changed the trace".into()
        })?;
        ensure(
            blocks
                .blocks()
                .iter()
                .all(|b| (b.state.norm_sqr() - 1.0).abs() < 1e-12),
            || "unnormalized block".into(),
        )?;
        counts[0] += 1;

        let again = blocks.twirl(&c.f, &c.noise, 1e-9).unwrap();
        let basis = blocks.support();
        let diff = (blocks.density_matrix(&basis) - again.density_matrix(&basis))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        ensure(diff < 1e-12, || format!("twirl not idempotent: {diff:e}"))?;
        counts[1] += 1;

        let pure = qfi_pure(&evolved, c.f.row(0));
        let mixed = qfi_mixed(&blocks, c.f.row(0));
        ensure(mixed <= pure + 1e-9 * pure.max(1.0), || {
            format!("twirl raised QFI {pure} -> {mixed}")
        })?;
        counts[2] += 1;
    }

    // Inversion symmetry and rescaling invariance of the linear program.
    while counts[3] < PROPERTY_CASES || counts[4] < PROPERTY_CASES {
        let p = random_real_problem(&mut rng);
        let Ok(a) = optimal_probe(&p) else { continue };
        let flipped = p
            .with_signal_row(p.signal_row().iter().map(|x| -x).collect())
            .unwrap();
        let b = optimal_probe(&flipped).map_err(|e| format!("flipped signal failed: {e}"))?;
        let neg: Vec<f64> = b.s.iter().map(|x| -x).collect();
        ensure(rel_close(a.qfi, b.qfi, 1e-9), || {
            format!("inversion changed QFI {} vs {}", a.qfi, b.qfi)
        })?;
        ensure(
            rel_close(dot(p.signal_row(), &neg), dot(p.signal_row(), &a.s), 1e-9),
            || "-s' is not optimal for the original program".into(),
        )?;
        counts[3] += 1;

        let mut rows = p.coefficients().rows().to_vec();
        for &k in p.noise_indices() {
            let c = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            rows[k].iter_mut().for_each(|x| *x *= c);
        }
        let scaled = DesignProblem::new(
            CoefficientMatrix::from_rows(rows).unwrap(),
            0,
            p.noise_indices().iter().copied(),
            p.bounds().to_vec(),
            false,
        )
        .unwrap();
        let s = optimal_probe(&scaled).map_err(|e| format!("rescaled problem failed: {e}"))?;
        ensure(rel_close(a.qfi, s.qfi, 1e-9), || {
            format!("rescaling changed QFI {} vs {}", a.qfi, s.qfi)
        })?;
        counts[4] += 1;
    }
    Ok(format!(
        "normalization {}, idempotence {}, data processing {}, inversion {}, rescaling {}",
        counts[0], counts[1], counts[2], counts[3], counts[4]
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Taylor f_perp parallel to (-1,2,0,-2,1)", criterion_1),
        ("Taylor optimal probe and QFI (24n)^2", criterion_2),
        ("Fourier alternating-sum case table", criterion_3),
        ("point-source optimum (1,1,0)", criterion_4),
        ("alternating block census", criterion_5),
        ("product-state advantage bound", criterion_6),
        ("noise insensitivity end to end", criterion_7),
        ("parity readout saturates QFI", criterion_8),
        ("branch level vs statevector oracle", criterion_9),
        ("property suites", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
