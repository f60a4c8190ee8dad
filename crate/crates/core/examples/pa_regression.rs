//! Online passive-aggressive regression learning `y = 0.3 * i + 0.7 * o`
//! from a stream, with the object share of each prediction.

use std::collections::BTreeMap;

use vp360::error::Result;
use vp360::predictor::{PaHyper, PaModel};

fn main() -> Result<()> {
    let mut m = PaModel::new(PaHyper { c: 1.0, ..PaHyper::default() })?;
    for step in 0..2000usize {
        let t = step as f64 * 0.05;
        let i = t.sin();
        let o = (1.7 * t).cos();
        let objs = BTreeMap::from([(0u32, o)]);
        let loss = m.update(i, &objs, 0.3 * i + 0.7 * o);
        if step % 400 == 0 || step == 1999 {
            println!(
                "step {step:4}: loss {loss:.5} w_i {:+.3} w_o {:+.3} bias {:+.4} object share {:.2}",
                m.w_intermediate,
                m.w_objects[&0],
                m.bias,
                m.object_contribution(i, &objs)
            );
        }
    }
    Ok(())
}
