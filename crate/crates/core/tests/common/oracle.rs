//! Brute-force reference implementations used by the property and acceptance tests.

use fairdispatch::dispatch::{Order, StopKind};
use fairdispatch::roadnet::NodeId;

/// Quickest completion over every precedence-valid stop sequence, plus the
/// first optimal sequence in (order id, kind) lexicographic order.
///
/// `sp(a, b)` is the travel time between nodes; the plan starts at `start`
/// at time `t0`.
pub fn brute_route(
    sp: &dyn Fn(NodeId, NodeId) -> f64,
    start: NodeId,
    t0: f64,
    orders: &[Order],
) -> Option<(f64, Vec<(u32, StopKind)>)> {
    let mut stops: Vec<(usize, StopKind)> = Vec::new();
    for (i, o) in orders.iter().enumerate() {
        if !o.is_picked_up() {
            stops.push((i, StopKind::Pickup));
        }
        stops.push((i, StopKind::Dropoff));
    }
    let mut best: Option<(f64, Vec<(u32, StopKind)>)> = None;
    permute(&mut stops, 0, &mut |seq| {
        // precedence: a pickup must come before its dropoff
        for (k, &(i, kind)) in seq.iter().enumerate() {
            if kind == StopKind::Dropoff && seq[k..].iter().any(|&(j, kd)| j == i && kd == StopKind::Pickup) {
                return;
            }
        }
        let mut at = start;
        let mut now = t0;
        for &(i, kind) in seq {
            let o = &orders[i];
            let node = if kind == StopKind::Pickup { o.restaurant } else { o.customer };
            now += if node == at { 0.0 } else { sp(at, node) };
            if kind == StopKind::Pickup {
                now = now.max(o.ready_at());
            }
            at = node;
        }
        if !now.is_finite() {
            return;
        }
        let key: Vec<(u32, StopKind)> = seq.iter().map(|&(i, k)| (orders[i].id.0, k)).collect();
        let better = match &best {
            None => true,
            Some((t, k)) => now < *t || (now == *t && key < *k),
        };
        if better {
            best = Some((now, key));
        }
    });
    best
}

fn permute<T: Copy>(items: &mut Vec<T>, k: usize, f: &mut dyn FnMut(&[T])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Maximum-cardinality minimum-weight matching by exhaustive enumeration of
/// partial injections rows -> columns. Returns (cardinality, total weight).
pub fn brute_matching(rows: usize, cols: usize, weight: &[f64], forbidden: &[bool]) -> (usize, f64) {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        r: usize,
        rows: usize,
        cols: usize,
        weight: &[f64],
        forbidden: &[bool],
        used: &mut Vec<bool>,
        card: usize,
        total: f64,
        best: &mut (usize, f64),
    ) {
        if r == rows {
            if card > best.0 || (card == best.0 && total < best.1) {
                *best = (card, total);
            }
            return;
        }
        rec(r + 1, rows, cols, weight, forbidden, used, card, total, best);
        for c in 0..cols {
            let i = r * cols + c;
            if !used[c] && !forbidden[i] {
                used[c] = true;
                rec(r + 1, rows, cols, weight, forbidden, used, card + 1, total + weight[i], best);
                used[c] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    rec(0, rows, cols, weight, forbidden, &mut vec![false; cols], 0, 0.0, &mut best);
    best
}

/// Trapezoid-rule Gini: one minus twice the area under the Lorenz curve.
pub fn gini_trapezoid(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let total: f64 = s.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let n = s.len() as f64;
    let mut area = 0.0;
    let mut prev = 0.0;
    let mut acc = 0.0;
    for v in &s {
        acc += v;
        let y = acc / total;
        area += (prev + y) / 2.0 / n;
        prev = y;
    }
    1.0 - 2.0 * area
}
