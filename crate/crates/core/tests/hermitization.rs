use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Norm, UPLO};
use overlap_lab::ensembles::{sample_ginibre, trial_rng, Beta, EnsembleSpec, EntryLaw};
use overlap_lab::hermitization::*;
use overlap_lab::{C64, CMat};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ginibre(beta: Beta, n: usize, seed: u64) -> CMat {
    sample_ginibre(&EnsembleSpec::new(beta, n, EntryLaw::Gaussian, seed).unwrap()).unwrap()
}

/// Dense spectral oracle: eigenpairs of the explicit 2N×2N Hermitisation.
struct DenseOracle {
    vals: Array1<f64>,
    vecs: Array2<C64>,
    n: usize,
}

impl DenseOracle {
    fn build(x: &CMat, z: C64) -> Self {
        let w = dense_w_matrix(x, z);
        let (vals, vecs) = w.eigh(UPLO::Lower).unwrap();
        DenseOracle {
            vals,
            vecs,
            n: x.nrows(),
        }
    }

    fn resolvent(&self, w: C64) -> Array2<C64> {
        let d = 2 * self.n;
        let mut g = Array2::<C64>::zeros((d, d));
        for j in 0..d {
            let col = self.vecs.column(j);
            let coef = C64::new(1.0, 0.0) / (self.vals[j] - w);
            for a in 0..d {
                for b in 0..d {
                    g[[a, b]] += coef * col[a] * col[b].conj();
                }
            }
        }
        g
    }

    fn im(m: &Array2<C64>) -> Array2<C64> {
        let mh = m.t().map(|v| v.conj());
        (m - &mh).mapv(|v| v / C64::new(0.0, 2.0))
    }

    fn f_mat(&self) -> Array2<C64> {
        let d = 2 * self.n;
        let mut f = Array2::<C64>::zeros((d, d));
        for k in 0..self.n {
            f[[k, self.n + k]] = c(1.0, 0.0);
        }
        f
    }
}

fn norm_trace(m: &Array2<C64>) -> C64 {
    let mut t = c(0.0, 0.0);
    for i in 0..m.nrows() {
        t += m[[i, i]];
    }
    t / m.nrows() as f64
}

#[test]
fn zero_matrix_at_z_one() {
    let x = Array2::<C64>::zeros((4, 4));
    let h = hermitize(&x, c(1.0, 0.0)).unwrap();
    for &s in h.sv() {
        assert!((s - 1.0).abs() < 1e-14);
    }
    // X−z = −I: the SVD pairing gives u_n = −v_n.
    for k in 0..4 {
        let diff = &h.left().column(k) + &h.right().column(k);
        assert!(diff.iter().map(|v| v.norm()).sum::<f64>() < 1e-12);
    }
}

#[test]
fn diagonal_singular_values() {
    let mut x = Array2::<C64>::zeros((2, 2));
    x[[1, 1]] = c(2.0, 0.0);
    let h = hermitize(&x, c(0.0, 0.0)).unwrap();
    assert!((h.sv()[0] - 0.0).abs() < 1e-14);
    assert!((h.sv()[1] - 2.0).abs() < 1e-14);
}

#[test]
fn reconstruction_and_orthonormality() {
    let x = ginibre(Beta::Two, 6, 17);
    let z = c(0.4, -0.3);
    let h = hermitize(&x, z).unwrap();
    let n = 6;
    let mut a = x.clone();
    for i in 0..n {
        a[[i, i]] -= z;
    }
    // ‖(X−z) − U diag(s) V*‖ < 1e−10.
    let mut rec = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        let u = h.left().column(k);
        let v = h.right().column(k);
        for i in 0..n {
            for j in 0..n {
                rec[[i, j]] += C64::new(h.sv()[k], 0.0) * u[i] * v[j].conj();
            }
        }
    }
    assert!((&a - &rec).norm_l2() < 1e-10);
    // Per-vector action ‖(X−z)v_n − s_n u_n‖ ≤ 1e−8·‖X−z‖.
    let scale = a.norm_l2();
    for k in 0..n {
        let av = a.dot(&h.right().column(k).to_owned());
        let target = h.left().column(k).mapv(|u| u * h.sv()[k]);
        let err: f64 = (&av - &target).iter().map(|v| v.norm()).sum();
        assert!(err <= 1e-8 * scale);
    }
    // Orthonormality of each system to 1e−10.
    for sys in [h.left(), h.right()] {
        let gram = sys.t().map(|v| v.conj()).dot(sys);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn trace_resolvent_large_eta_expansion() {
    let x = ginibre(Beta::Two, 32, 5);
    let h = hermitize(&x, c(0.2, 0.1)).unwrap();
    let w = c(0.0, 1e4);
    let g = h.trace_resolvent(w).unwrap();
    let expect = -C64::new(1.0, 0.0) / w;
    assert!((g - expect).norm() / expect.norm() < 1e-6);
}

#[test]
fn trace_resolvent_rejects_real_axis() {
    let x = ginibre(Beta::Two, 4, 1);
    let h = hermitize(&x, c(0.0, 0.0)).unwrap();
    assert!(h.trace_resolvent(c(0.5, 0.0)).is_err());
}

#[test]
fn trace_resolvent_single_local_law_desk_scale() {
    // |⟨G⟩ − m| ≤ 10/(Nη) at moderate size.
    let n = 256;
    let x = ginibre(Beta::Two, n, 23);
    let z = c(0.0, 0.0);
    let h = hermitize(&x, z).unwrap();
    let w = c(0.0, 0.5);
    let g = h.trace_resolvent(w).unwrap();
    let m = overlap_lab::self_consistent::solve_m(z, w).unwrap().m;
    assert!(
        (g - m).norm() <= 10.0 / (n as f64 * 0.5),
        "err {:.3e}",
        (g - m).norm()
    );
}

#[test]
fn zero_mode_contributes_two() {
    // z equal to an eigenvalue of X: s₁ = 0, and η·(2N-trace of Im G(iη)) ≥ 2.
    let mut x = Array2::<C64>::zeros((4, 4));
    x[[0, 0]] = c(0.3, 0.0);
    x[[1, 1]] = c(-0.2, 0.4);
    x[[2, 2]] = c(0.1, -0.5);
    x[[3, 3]] = c(0.7, 0.1);
    let h = hermitize(&x, c(0.3, 0.0)).unwrap();
    assert!(h.sv()[0] < 1e-14);
    for eta in [1e-3, 1e-6, 1e-9] {
        let v = eta * h.tr_im_g(eta).unwrap();
        assert!(v >= 2.0, "eta={eta}: {v}");
    }
}

#[test]
fn two_resolvent_matches_dense_oracle() {
    let n = 8;
    let x = ginibre(Beta::Two, n, 31);
    let z = c(0.5, 0.2);
    let h = hermitize(&x, z).unwrap();
    let oracle = DenseOracle::build(&x, z);
    let f = oracle.f_mat();
    let fstar = f.t().map(|v| v.conj());
    for (w1, w2) in [
        (c(0.0, 0.3), c(0.0, 0.3)),
        (c(0.2, 0.05), c(-0.1, 0.4)),
        (c(0.1, -0.2), c(0.3, 0.1)),
    ] {
        let g1 = oracle.resolvent(w1);
        let g2 = oracle.resolvent(w2);
        // Plain chain.
        let dense_plain = norm_trace(&g1.dot(&f).dot(&g2).dot(&fstar));
        let lib_plain = h.two_resolvent_trace(w1, w2, TwoResolventMode::Plain).unwrap();
        assert!(
            (dense_plain - lib_plain).norm() < 1e-10,
            "plain {dense_plain} vs {lib_plain} at ({w1}, {w2})"
        );
        // Imaginary chain.
        let im1 = DenseOracle::im(&g1);
        let im2 = DenseOracle::im(&g2);
        let dense_im = norm_trace(&im1.dot(&f).dot(&im2).dot(&fstar));
        let lib_im = h
            .two_resolvent_trace(w1, w2, TwoResolventMode::Imaginary)
            .unwrap();
        assert!(
            (dense_im - lib_im).norm() < 1e-10,
            "imaginary {dense_im} vs {lib_im} at ({w1}, {w2})"
        );
        // Swapping (w1, w2) together with F ↔ F* leaves the imaginary chain
        // unchanged.
        let dense_swapped = norm_trace(&im2.dot(&fstar).dot(&im1).dot(&f));
        assert!((dense_swapped - lib_im).norm() < 1e-10);
    }
}

#[test]
fn two_resolvent_imaginary_brute_force_formula() {
    // At w1=w2=iη the imaginary chain equals the explicit double sum over
    // signed eigenpairs.
    let n = 8;
    let x = ginibre(Beta::One, n, 77);
    let z = c(0.3, 0.0);
    let h = hermitize(&x, z).unwrap();
    let eta = 0.17;
    let lib = h
        .two_resolvent_trace(c(0.0, eta), c(0.0, eta), TwoResolventMode::Imaginary)
        .unwrap();
    let mut brute = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pair = h.sv_overlap((i + 1) as i64, (j + 1) as i64).unwrap();
            let li = h.sv()[i];
            let lj = h.sv()[j];
            brute += 4.0 * eta * eta * pair * pair
                / ((li * li + eta * eta) * (lj * lj + eta * eta));
        }
    }
    brute /= 2.0 * n as f64;
    assert!((lib.re - brute).abs() < 1e-10, "{} vs {brute}", lib.re);
    assert!(lib.im.abs() < 1e-14);
}

#[test]
fn imaginary_mode_nonnegative() {
    let x = ginibre(Beta::Two, 12, 3);
    let h = hermitize(&x, c(0.1, 0.1)).unwrap();
    for (w1, w2) in [(c(0.5, 0.2), c(-0.3, 0.7)), (c(0.0, 1e-3), c(0.0, 2.0))] {
        let v = h.two_resolvent_trace(w1, w2, TwoResolventMode::Imaginary).unwrap();
        assert!(v.re >= 0.0 && v.im.abs() < 1e-14);
    }
}

#[test]
fn conjugate_and_odd_symmetry() {
    let x = ginibre(Beta::Two, 16, 9);
    let h = hermitize(&x, c(0.6, -0.1)).unwrap();
    let w = c(0.37, 0.21);
    let g = h.trace_resolvent(w).unwrap();
    let g_conj = h.trace_resolvent(w.conj()).unwrap();
    assert!((g.conj() - g_conj).norm() < 1e-14);
    let g_neg = h.trace_resolvent(-w).unwrap();
    assert!((g_neg + g).norm() < 1e-14);
}

#[test]
fn sv_overlap_basics() {
    // X = 0, z = 1: u_n = −v_n, so the table is −δ and pair overlaps are
    // δ_nm/2.
    let x = Array2::<C64>::zeros((4, 4));
    let h = hermitize(&x, c(1.0, 0.0)).unwrap();
    for i in 1..=4i64 {
        for j in 1..=4i64 {
            let expect = if i == j { 0.5 } else { 0.0 };
            assert!((h.sv_overlap(i, -j).unwrap() - expect).abs() < 1e-12);
        }
    }
    // Normal (diagonal) X at z = an eigenvalue: the zero mode overlap is 1/2.
    let mut d = Array2::<C64>::zeros((4, 4));
    d[[0, 0]] = c(0.9, 0.2);
    d[[1, 1]] = c(-0.3, 0.6);
    d[[2, 2]] = c(0.2, -0.8);
    d[[3, 3]] = c(-0.5, -0.4);
    let hd = hermitize(&d, c(0.9, 0.2)).unwrap();
    assert!(hd.sv()[0] < 1e-14);
    assert!((hd.sv_overlap(1, 1).unwrap() - 0.5).abs() < 1e-12);
    // Out-of-range indices rejected.
    assert!(hd.sv_overlap(0, 1).is_err());
    assert!(hd.sv_overlap(1, 5).is_err());
}

#[test]
fn sv_overlap_bounded_by_half_and_matches_dense() {
    let n = 8;
    let x = ginibre(Beta::Two, n, 13);
    let z = c(1.0, 0.0);
    let h = hermitize(&x, z).unwrap();
    let oracle = DenseOracle::build(&x, z);
    let f = oracle.f_mat();
    // Dense positive-spectrum eigenvectors: columns n..2n correspond to
    // +s_1.. +s_n (eigh sorts ascending).
    for i in 0..n {
        for j in 0..n {
            let wi = oracle.vecs.column(n + i);
            let wj = oracle.vecs.column(n + j);
            let mut val = c(0.0, 0.0);
            for a in 0..2 * n {
                for b in 0..2 * n {
                    val += wi[a].conj() * f[[a, b]] * wj[b];
                }
            }
            let lib = h.sv_overlap((i + 1) as i64, (j + 1) as i64).unwrap();
            assert!((val.norm() - lib).abs() < 1e-10, "({i},{j})");
            assert!(lib <= 0.5 + 1e-12);
        }
    }
}

#[test]
fn quantiles_center_edge_and_symmetry() {
    let gam = quantiles(c(0.0, 0.0), 64, 64).unwrap();
    // Top quantile reaches the spectral edge 2 within 1%.
    let top = gam[63];
    assert!((top - 2.0).abs() < 0.02, "gamma_N = {top}");
    // Monotone increasing.
    for k in 1..64 {
        assert!(gam[k] > gam[k - 1]);
    }
    // Outside the disk the first quantile clears half the gap.
    let z = c(1.2, 0.0);
    let delta = overlap_lab::self_consistent::density_gap(z).unwrap();
    let g1 = quantiles(z, 64, 1).unwrap()[0];
    assert!(g1 >= delta / 2.0, "gamma_1 {g1} vs gap/2 {}", delta / 2.0);
    // Requesting more mass than reachable errors out.
    assert!(quantiles(c(0.0, 0.0), 4, 9).is_err());
}

#[test]
fn quantile_mass_roundtrip() {
    // (1/π)∫₀^{γ_n} ρ = n/(2N) to quadrature accuracy.
    let z = c(0.5, 0.0);
    let big_n = 32;
    let gam = quantiles(z, big_n, 16).unwrap();
    for (k, &g) in gam.iter().enumerate() {
        let mass = overlap_lab::quad::adaptive_simpson(
            &mut |e| overlap_lab::self_consistent::rho_axis(z, e).unwrap(),
            0.0,
            g,
            1e-12,
        ) / std::f64::consts::PI;
        let target = (k + 1) as f64 / (2.0 * big_n as f64);
        assert!((mass - target).abs() < 1e-6, "n={}: {mass} vs {target}", k + 1);
    }
}

#[test]
fn rigidity_slack_infinity_passes() {
    let n = 32;
    let x = ginibre(Beta::Two, n, 41);
    let z = c(1.0, 0.0);
    let h = hermitize(&x, z).unwrap();
    let gam = quantiles(z, n, n / 2).unwrap();
    let rep = rigidity_report(&h, &gam, f64::INFINITY, 0.5).unwrap();
    assert_eq!(rep.entries.len(), n / 2);
    assert_eq!(rep.pass_fraction, 1.0);
    // Indices beyond c·N are excluded.
    let rep_small = rigidity_report(&h, &gam, 10.0, 0.25).unwrap();
    assert_eq!(rep_small.entries.len(), n / 4);
}
