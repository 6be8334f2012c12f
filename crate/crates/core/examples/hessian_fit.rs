//! Composite Hessian at the origin and the I-projection of a moment target.

use parlay_core::ising::{
    fit_to_moments_with, hessian_composite, moments_exact, uniform_weights, FitMethod, IsingParams, FIT_MAX_ITER,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 4;
    let zero = IsingParams::zeros(m);
    let h = hessian_composite(&zero, &uniform_weights(m), &moments_exact(&zero)?)?;
    let eig = h.clone().symmetric_eigen().eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    println!("H[0,0] = {:.4}, H[{m},{m}] = {:.4}, eigenvalues in [{lo:.5}, {hi:.4}]", h[(0, 0)], h[(m, m)]);

    let truth = IsingParams::new(vec![0.3, -0.5, 0.1, 0.8], vec![0.6, -0.2, 0.0, 0.4, 0.9, -0.7])?;
    let target = moments_exact(&truth)?;
    // Gradient descent crawls along the flat directions, so ask it for less.
    for (method, tol) in [(FitMethod::Newton, 1e-9), (FitMethod::GradientDescent, 1e-4)] {
        let rep = fit_to_moments_with(&target, tol, FIT_MAX_ITER, method)?;
        println!(
            "{method:?}: {} iterations, max moment gap {:.2e}, |phi - phi_true|^2 = {:.2e}",
            rep.iterations,
            rep.max_gap,
            rep.params.dist_sq(&truth)
        );
    }
    Ok(())
}
