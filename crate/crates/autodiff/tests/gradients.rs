use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratnmt_autodiff::{grad_check, GradCheckConfig, ParamId, ParamStore, Result, Tape, Tensor, Var};

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Contracts an arbitrary output against fixed random weights so every
/// output coordinate contributes to a scalar loss.
fn project(tape: &mut Tape<f64>, out: Var, rng_seed: u64) -> Result<Var> {
    let shape = tape.value(out).shape().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let w = tape.constant(random(&mut rng, &shape));
    let prod = tape.mul(out, w)?;
    tape.sum(prod)
}

fn check<F>(store: &mut ParamStore<f64>, f: F) -> f64
where
    F: FnMut(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let cfg = GradCheckConfig {
        epsilon: 1e-5,
        coords_per_param: 64,
        seed: 3,
    };
    grad_check(store, cfg, f).unwrap()
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    (rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1..=8))
}

const TOL: f64 = 1e-5;

#[test]
fn every_primitive_passes_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10u64 {
        let (m, k, n) = dims(&mut rng);
        let mut store = ParamStore::new();
        let a = store.add("a", random(&mut rng, &[m, k])).unwrap();
        let b = store.add("b", random(&mut rng, &[k, n])).unwrap();
        let c = store.add("c", random(&mut rng, &[m, k])).unwrap();
        let bt = store.add("bt", random(&mut rng, &[n, k])).unwrap();
        let row = store.add("row", random(&mut rng, &[k])).unwrap();
        let table = store.add("table", random(&mut rng, &[n + 1, k])).unwrap();
        let mask = {
            let d: Vec<f64> = (0..m * k)
                .map(|_| if rng.gen_bool(0.7) { 1.0 / 0.7 } else { 0.0 })
                .collect();
            Tensor::new(vec![m, k], d).unwrap()
        };
        let targets: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let idx: Vec<usize> = (0..m).map(|_| rng.gen_range(0..=n)).collect();
        let bags: Vec<Vec<usize>> = (0..m)
            .map(|_| (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..=n)).collect())
            .collect();
        let split = if k > 1 { k / 2 } else { 1 };
        let seed = 100 + trial;

        type Case<'a> = (
            &'a str,
            Box<dyn Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var> + 'a>,
        );
        let p = |t: &mut Tape<f64>, s: &ParamStore<f64>, id: ParamId| t.param(s, id);
        let cases: Vec<Case> = vec![
            (
                "matmul",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, b));
                    let o = t.matmul(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "matmul_nt",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, bt));
                    let o = t.matmul_nt(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "transpose",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.transpose(x)?;
                    project(t, o, seed)
                }),
            ),
            (
                "add",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, c));
                    let o = t.add(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "add_row",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, row));
                    let o = t.add_row(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "mul",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, c));
                    let o = t.mul(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "mul_row",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, row));
                    let o = t.mul_row(x, y)?;
                    project(t, o, seed)
                }),
            ),
            (
                "scale",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.scale(x, -1.7)?;
                    project(t, o, seed)
                }),
            ),
            (
                "concat_cols",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, c));
                    let o = t.concat_cols(&[x, y])?;
                    project(t, o, seed)
                }),
            ),
            (
                "slice_cols",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.slice_cols(x, 0, split.min(k))?;
                    project(t, o, seed)
                }),
            ),
            (
                "concat_rows",
                Box::new(|t, s| {
                    let (x, y) = (p(t, s, a), p(t, s, c));
                    let o = t.concat_rows(&[x, y])?;
                    project(t, o, seed)
                }),
            ),
            (
                "slice_rows",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.slice_rows(x, m / 2, m)?;
                    project(t, o, seed)
                }),
            ),
            (
                "embedding",
                Box::new(|t, s| {
                    let x = p(t, s, table);
                    let o = t.embedding(x, &idx)?;
                    project(t, o, seed)
                }),
            ),
            (
                "mean_bag",
                Box::new(|t, s| {
                    let x = p(t, s, table);
                    let o = t.mean_bag(x, &bags)?;
                    project(t, o, seed)
                }),
            ),
            (
                "softmax",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.softmax(x)?;
                    project(t, o, seed)
                }),
            ),
            (
                "log_softmax",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.log_softmax(x)?;
                    project(t, o, seed)
                }),
            ),
            (
                "layer_norm",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.layer_norm(x, 1e-5)?;
                    project(t, o, seed)
                }),
            ),
            (
                "relu",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.relu(x)?;
                    project(t, o, seed)
                }),
            ),
            (
                "dropout",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    let o = t.dropout(x, mask.clone())?;
                    project(t, o, seed)
                }),
            ),
            (
                "cross_entropy",
                Box::new(|t, s| {
                    let x = p(t, s, a);
                    t.cross_entropy(x, &targets)
                }),
            ),
        ];
        for (name, f) in cases {
            if name == "layer_norm" && k == 1 {
                // a single column normalizes to a constant zero
                continue;
            }
            let err = check(&mut store, |t, s| f(t, s));
            assert!(err < TOL, "{name} trial {trial} ({m}x{k}x{n}): rel err {err:e}");
        }
    }
}

#[test]
fn linear_loss_gradient_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = ParamStore::new();
    let w = store.add("w", random(&mut rng, &[1, 6])).unwrap();
    let x = random(&mut rng, &[1, 6]);
    let err = check(&mut store, |t, s| {
        let wv = t.param(s, w);
        let xv = t.constant(x.clone());
        let o = t.mul(wv, xv)?;
        t.sum(o)
    });
    assert!(err < 1e-9, "{err:e}");
}

#[test]
fn softmax_cross_entropy_alone_is_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut store = ParamStore::new();
    let l = store.add("logits", random(&mut rng, &[4, 7])).unwrap();
    let err = check(&mut store, |t, s| {
        let x = t.param(s, l);
        t.cross_entropy(x, &[0, 3, 6, 2])
    });
    assert!(err < 1e-7, "{err:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backward_is_linear_in_upstream(seed in any::<u64>(), m in 1usize..6, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let a = store.add("a", random(&mut rng, &[m, k])).unwrap();
        let w = store.add("w", random(&mut rng, &[k, k])).unwrap();
        let u = random(&mut rng, &[m, k]);
        let v = random(&mut rng, &[m, k]);

        let mut tape = Tape::new();
        let (av, wv) = (tape.param(&store, a), tape.param(&store, w));
        let h = tape.matmul(av, wv).unwrap();
        let out = tape.softmax(h).unwrap();

        let mut s1 = store.clone();
        tape.backward_with(out, u.clone(), &mut s1).unwrap();
        tape.backward_with(out, v.clone(), &mut s1).unwrap();

        let mut uv = u.clone();
        uv.add_assign(&v);
        let mut s2 = store.clone();
        tape.backward_with(out, uv, &mut s2).unwrap();

        for id in [a, w] {
            for (x, y) in s1.grad(id).data().iter().zip(s2.grad(id).data()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(seed in any::<u64>(), m in 1usize..8, k in 1usize..64, scale in 0.1f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f32> = (0..m * k).map(|_| (rng.gen_range(-1.0..1.0) * scale) as f32).collect();
        let mut tape = Tape::new();
        let xv = tape.constant(Tensor::new(vec![m, k], x).unwrap());
        let y = tape.softmax(xv).unwrap();
        for r in 0..m {
            let s: f32 = tape.value(y).row(r).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-6);
        }
    }
}
