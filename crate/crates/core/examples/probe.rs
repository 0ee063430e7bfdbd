use shiftfront::bvp::{BvpSpec, Coefficient};
use shiftfront::verify::oracle_bvp;

fn main() {
    for (c, x) in [(0.04, 45.0), (0.04, 25.0), (0.2533, 45.0), (0.4667, 45.0), (0.36437, 45.0), (0.36437, 30.0)] {
        let spec = BvpSpec {
            xl: -x, xr: 0.0, left_value: 1.0, right_value: 0.0,
            drift: c, diffusion: 1.0, competition: 1.0,
            coefficient: Coefficient::Constant(1.0),
        };
        match oracle_bvp(&spec, 1e-10) {
            Ok(p) => println!("c={c:<8} X={x}: slope={:.10} eps={:.3e} mismatch={:.2e}", p.slope_right, p.epsilon, p.end_mismatch),
            Err(e) => println!("c={c:<8} X={x}: ERROR {e}"),
        }
    }
}
