//! Max-sum dynamic programming over template tilings of a tick range.
//!
//! Nodes are `(template, tick)` for ticks `1..=K`; a virtual source sits at
//! tick 0. An edge `(a', k') -> (a, k)` with `k' < k` exists when the
//! transition `a' -> a` is allowed (any template may follow the source) and
//! carries the weight of labelling `[k', k]` with `a`. Ties resolve to the
//! lowest predecessor tick, then the lowest template index.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpNode {
    pub template: usize,
    pub tick: usize,
    pub belief: f64,
    /// `(tick, template)` of the predecessor; `None` for the source.
    pub back: Option<(usize, usize)>,
}

/// One labelled span `[start, end]` in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub template: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpPath {
    pub spans: Vec<Span>,
    pub objective: f64,
}

/// Forward pass: `table[k - 1][a]` is node `(a, k)`.
pub fn forward(
    n_ticks: usize,
    n_templates: usize,
    allowed: impl Fn(usize, usize) -> bool,
    edge: impl Fn(usize, usize, usize) -> f64,
) -> Vec<Vec<DpNode>> {
    let mut table: Vec<Vec<DpNode>> = Vec::with_capacity(n_ticks);
    for k in 1..=n_ticks {
        let mut row = Vec::with_capacity(n_templates);
        for a in 0..n_templates {
            let mut node = DpNode { template: a, tick: k, belief: f64::NEG_INFINITY, back: None };
            let from_source = edge(a, 0, k);
            if from_source > node.belief {
                node.belief = from_source;
            }
            for kp in 1..k {
                let w = edge(a, kp, k);
                if w == f64::NEG_INFINITY {
                    continue;
                }
                for (ap, pred) in table[kp - 1].iter().enumerate() {
                    if pred.belief == f64::NEG_INFINITY || !allowed(ap, a) {
                        continue;
                    }
                    let cand = pred.belief + w;
                    if cand > node.belief {
                        node.belief = cand;
                        node.back = Some((kp, ap));
                    }
                }
            }
            row.push(node);
        }
        table.push(row);
    }
    table
}

/// Backtrace from the best final node; `None` when no path reaches the
/// sink.
pub fn backtrace(table: &[Vec<DpNode>]) -> Option<DpPath> {
    let last = table.last()?;
    let mut best: Option<&DpNode> = None;
    for n in last {
        if n.belief > best.map_or(f64::NEG_INFINITY, |b| b.belief) {
            best = Some(n);
        }
    }
    let best = best?;
    let mut spans = Vec::new();
    let mut cur = *best;
    loop {
        match cur.back {
            Some((kp, ap)) => {
                spans.push(Span { template: cur.template, start: kp, end: cur.tick });
                cur = table[kp - 1][ap];
            }
            None => {
                spans.push(Span { template: cur.template, start: 0, end: cur.tick });
                break;
            }
        }
    }
    spans.reverse();
    Some(DpPath { spans, objective: best.belief })
}

pub fn best_path(
    n_ticks: usize,
    n_templates: usize,
    allowed: impl Fn(usize, usize) -> bool,
    edge: impl Fn(usize, usize, usize) -> f64,
) -> Option<DpPath> {
    if n_ticks == 0 || n_templates == 0 {
        return None;
    }
    backtrace(&forward(n_ticks, n_templates, allowed, edge))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_template_prefers_one_span_under_peaked_prior() {
        // flat unit scores, prior peaked at 3 units
        let prior = |len: usize| -((len as f64).ln() - 3f64.ln()).powi(2) / 0.02;
        let p = best_path(3, 1, |_, _| true, |_, kp, k| prior(k - kp)).unwrap();
        assert_eq!(p.spans, vec![Span { template: 0, start: 0, end: 3 }]);
    }

    #[test]
    fn no_path_when_every_edge_is_impossible() {
        assert!(best_path(3, 2, |_, _| true, |_, _, _| f64::NEG_INFINITY).is_none());
        assert!(best_path(0, 2, |_, _| true, |_, _, _| 0.0).is_none());
    }

    #[test]
    fn forbidden_transitions_force_a_single_template() {
        // each unit rewards alternating templates, but switching is forbidden
        let score = |a: usize, kp: usize, k: usize| (kp..k).map(|u| if u % 2 == a { 1.0 } else { 0.0 }).sum::<f64>();
        let p = best_path(4, 2, |x, y| x == y, score).unwrap();
        assert!(p.spans.iter().all(|s| s.template == p.spans[0].template));
        let free = best_path(4, 2, |_, _| true, score).unwrap();
        assert_eq!(free.objective, 4.0);
    }

    #[test]
    fn ties_prefer_low_indices() {
        let p = best_path(2, 3, |_, _| true, |_, _, _| 0.0).unwrap();
        // source edge is considered first, template 0 first
        assert_eq!(p.spans, vec![Span { template: 0, start: 0, end: 2 }]);
    }
}
