use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

use super::Context;

#[inline]
fn clamp_frame(t: usize, offset: i32, frames: usize) -> usize {
    (t as i64 + offset as i64).clamp(0, frames as i64 - 1) as usize
}

/// Row `t` of the result is rows `t+L ..= t+R` of `features` laid side by
/// side, with the first/last row repeated past the edges.
pub fn splice(features: ArrayView2<'_, f64>, context: Context) -> Array2<f64> {
    let (frames, dim) = features.dim();
    if context.width() == 1 {
        return features.to_owned();
    }
    let mut out = Array2::zeros((frames, dim * context.width()));
    for t in 0..frames {
        let mut row = out.row_mut(t);
        for (block, offset) in context.offsets().enumerate() {
            let src = features.row(clamp_frame(t, offset, frames));
            row.slice_mut(s![block * dim..(block + 1) * dim])
                .assign(&src);
        }
    }
    out
}

/// Adjoint of [`splice`]: scatters spliced gradients back onto the source
/// frames, summing where edge replication reused a frame.
pub fn unsplice_add(grad: ArrayView2<'_, f64>, context: Context, mut into: ArrayViewMut2<'_, f64>) {
    let (frames, dim) = into.dim();
    debug_assert_eq!(grad.dim(), (frames, dim * context.width()));
    for t in 0..frames {
        let row = grad.row(t);
        for (block, offset) in context.offsets().enumerate() {
            let mut dst = into.row_mut(clamp_frame(t, offset, frames));
            dst += &row.slice(s![block * dim..(block + 1) * dim]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_context() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(splice(x.view(), Context::CURRENT), x);
    }

    #[test]
    fn edge_replication() {
        let x = array![[1.0], [2.0], [3.0]];
        let got = splice(x.view(), Context::new(-1, 1).unwrap());
        assert_eq!(
            got,
            array![[1.0, 1.0, 2.0], [1.0, 2.0, 3.0], [2.0, 3.0, 3.0]]
        );
    }

    #[test]
    fn asymmetric_context_single_frame() {
        let x = array![[5.0, 6.0]];
        let got = splice(x.view(), Context::new(-2, 1).unwrap());
        assert_eq!(got, array![[5.0, 6.0, 5.0, 6.0, 5.0, 6.0, 5.0, 6.0]]);
    }

    #[test]
    fn perturbation_stays_inside_window() {
        let ctx = Context::new(-2, 1).unwrap();
        let x = Array2::from_shape_fn((12, 3), |(t, d)| (t * 3 + d) as f64);
        let base = splice(x.view(), ctx);
        let t0 = 6;
        let mut y = x.clone();
        y[[t0, 1]] += 1.0;
        let moved = splice(y.view(), ctx);
        for t in 0..12 {
            let changed = base.row(t) != moved.row(t);
            let inside = t0 as i32 - t as i32 >= ctx.left() && t0 as i32 - t as i32 <= ctx.right();
            assert_eq!(changed, inside, "row {t}");
        }
    }

    #[test]
    fn unsplice_is_adjoint() {
        // <splice(x), g> == <x, unsplice(g)>
        let ctx = Context::new(-2, 3).unwrap();
        let x = Array2::from_shape_fn((7, 2), |(t, d)| ((t * 7 + d * 3) % 5) as f64 - 2.0);
        let g = Array2::from_shape_fn((7, 12), |(t, d)| ((t * 11 + d) % 7) as f64 - 3.0);
        let lhs: f64 = (&splice(x.view(), ctx) * &g).sum();
        let mut back = Array2::zeros((7, 2));
        unsplice_add(g.view(), ctx, back.view_mut());
        let rhs: f64 = (&x * &back).sum();
        assert_eq!(lhs, rhs);
    }
}
