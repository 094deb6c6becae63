use ndarray::array;
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};

fn main() {
    let a = array![
        [num_complex::Complex64::new(0.0, 0.0), num_complex::Complex64::new(2.0, 0.0)],
        [num_complex::Complex64::new(0.0, 0.0), num_complex::Complex64::new(1.0, 0.0)]
    ];
    let (vals, vecs) = a.eig().unwrap();
    println!("eig vals: {vals}");
    let inv = vecs.inv().unwrap();
    println!("inv row0: {}", inv.row(0));
    let (u, s, vt) = a.svd(true, true).unwrap();
    println!("svd s: {s}, u00 {}, vt00 {}", u.unwrap()[[0, 0]], vt.unwrap()[[0, 0]]);
    let h = array![
        [num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(0.0, 1.0)],
        [num_complex::Complex64::new(0.0, -1.0), num_complex::Complex64::new(2.0, 0.0)]
    ];
    let (w, _v) = h.eigh(UPLO::Lower).unwrap();
    println!("eigh w: {w}");
}
