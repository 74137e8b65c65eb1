//! Shape arithmetic and broadcast iteration.
//!
//! Broadcasting follows the usual right-aligned rule, restricted to axes of
//! size one: a missing leading axis counts as size one, and an axis may only
//! be stretched when its size is exactly one.

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub fn broadcast_shapes(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for k in 0..rank {
        let da = dim_from_right(a, rank - 1 - k);
        let db = dim_from_right(b, rank - 1 - k);
        out[k] = if da == db {
            da
        } else if da == 1 {
            db
        } else if db == 1 {
            da
        } else {
            return None;
        };
    }
    Some(out)
}

/// True when `small` can be stretched to `big` under the size-one rule.
pub fn broadcastable_to(small: &[usize], big: &[usize]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let off = big.len() - small.len();
    small
        .iter()
        .enumerate()
        .all(|(k, &d)| d == big[off + k] || d == 1)
}

fn dim_from_right(shape: &[usize], pos_from_right: usize) -> usize {
    if pos_from_right < shape.len() {
        shape[shape.len() - 1 - pos_from_right]
    } else {
        1
    }
}

pub fn contiguous_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for k in (0..shape.len()).rev() {
        strides[k] = acc;
        acc *= shape[k];
    }
    strides
}

/// Strides of `input` viewed at the rank of `out`, zero on stretched axes.
pub fn broadcast_strides(input: &[usize], out: &[usize]) -> Vec<usize> {
    let own = contiguous_strides(input);
    let off = out.len() - input.len();
    (0..out.len())
        .map(|k| {
            if k < off || input[k - off] == 1 {
                0
            } else {
                own[k - off]
            }
        })
        .collect()
}

/// Visits every position of `out` in row-major order, passing the flat
/// offsets into each operand described by `strides`.
pub fn for_each_offset<const N: usize>(
    out: &[usize],
    strides: [&[usize]; N],
    mut f: impl FnMut([usize; N]),
) {
    let total = numel(out);
    if total == 0 {
        return;
    }
    let rank = out.len();
    let mut idx = vec![0usize; rank];
    let mut offs = [0usize; N];
    for _ in 0..total {
        f(offs);
        for d in (0..rank).rev() {
            idx[d] += 1;
            for (o, s) in offs.iter_mut().zip(strides.iter()) {
                *o += s[d];
            }
            if idx[d] < out[d] {
                break;
            }
            for (o, s) in offs.iter_mut().zip(strides.iter()) {
                *o -= s[d] * out[d];
            }
            idx[d] = 0;
        }
    }
}

/// (outer, length, inner) decomposition around `axis`.
pub fn split_at_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = numel(&shape[..axis]);
    let inner = numel(&shape[axis + 1..]);
    (outer, shape[axis], inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_rules() {
        assert_eq!(broadcast_shapes(&[3, 1], &[1, 4]), Some(vec![3, 4]));
        assert_eq!(broadcast_shapes(&[], &[2, 2]), Some(vec![2, 2]));
        assert_eq!(broadcast_shapes(&[3], &[2, 3]), Some(vec![2, 3]));
        assert_eq!(broadcast_shapes(&[2], &[3]), None);
        assert!(broadcastable_to(&[1, 3], &[4, 3]));
        assert!(!broadcastable_to(&[2, 3], &[4, 3]));
    }

    #[test]
    fn offset_walk_matches_manual_indexing() {
        let out = [2, 3];
        let sa = broadcast_strides(&[2, 1], &out);
        let sb = broadcast_strides(&[3], &out);
        let mut seen = Vec::new();
        for_each_offset(&out, [&sa, &sb], |[a, b]| seen.push((a, b)));
        assert_eq!(seen, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    }
}
