//! The relation engine: defining relations as oriented rewrite rules, tiered
//! normalization, and bounded bidirectional equality search with replayable
//! traces.
//!
//! Rules are matched through the diagram's segment wiring: a rule names the
//! slices it consumes and the engine first reorders them into a contiguous
//! block (always possible when the wiring matches, because every in-between
//! slice is independent of the block), then splices in the replacement and
//! re-canonicalizes. Orientation policy: equalities that shrink the
//! generator count are reducing; dot slides, bends, and rotation unfoldings
//! are bidirectional and only used inside the proof search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::rngs::StdRng;
use rand::Rng;
use thiserror::Error;

use crate::bubbles::canonical_bubble;
use crate::cartan::{Theory, Weight};
use crate::diagram::{seq_to_string, Diagram, DiagramError, Entry, Gen, Morphism, Seq, Slice};
use crate::scalars::Scalar;

#[derive(Error, Debug)]
pub enum RewriteError {
    #[error("rule installation failed: {0}")]
    Install(String),
    #[error("no match for rule {rule} at term {term}, slices {slices:?}")]
    NoMatch {
        rule: String,
        term: usize,
        slices: Vec<usize>,
    },
    #[error("inputs are not parallel: {0}")]
    NotParallel(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("{0}")]
    Other(String),
}

/// Strand-segment wiring of a diagram.
pub struct Wiring {
    pub levels: Vec<Seq>,
    pub entry: Vec<Entry>,
    pub producer: Vec<Option<usize>>,
    pub consumer: Vec<Option<usize>>,
    pub in_segs: Vec<Vec<usize>>,
    pub out_segs: Vec<Vec<usize>>,
}

impl Wiring {
    pub fn build(d: &Diagram) -> Wiring {
        let levels = d.levels().expect("wiring of valid diagram");
        let mut entry: Vec<Entry> = Vec::new();
        let mut producer: Vec<Option<usize>> = Vec::new();
        let mut consumer: Vec<Option<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        for &e in &d.source {
            cur.push(entry.len());
            entry.push(e);
            producer.push(None);
            consumer.push(None);
        }
        let mut in_segs = Vec::with_capacity(d.slices.len());
        let mut out_segs = Vec::with_capacity(d.slices.len());
        for (k, s) in d.slices.iter().enumerate() {
            let a = s.gen.in_arity();
            let ins: Vec<usize> = cur[s.pos..s.pos + a].to_vec();
            for &seg in &ins {
                consumer[seg] = Some(k);
            }
            let outs: Vec<usize> = s
                .gen
                .out_seq()
                .into_iter()
                .map(|e| {
                    let id = entry.len();
                    entry.push(e);
                    producer.push(Some(k));
                    consumer.push(None);
                    id
                })
                .collect();
            cur.splice(s.pos..s.pos + a, outs.iter().copied());
            in_segs.push(ins);
            out_segs.push(outs);
        }
        Wiring {
            levels,
            entry,
            producer,
            consumer,
            in_segs,
            out_segs,
        }
    }

    /// True when `seg` is not produced by any slice in `block`.
    fn external(&self, seg: usize, block: &[usize]) -> bool {
        match self.producer[seg] {
            None => true,
            Some(k) => !block.contains(&k),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dir {
    Fwd,
    Bwd,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if matches!(self, Dir::Fwd) { "fwd" } else { "bwd" })
    }
}

/// A concrete rewrite opportunity inside one diagram.
#[derive(Clone, Debug)]
pub struct Match {
    pub family: usize,
    pub dir: Dir,
    /// Matched slice indices (ascending). Empty for pure insertions.
    pub slices: Vec<usize>,
    /// For insertions: the level and a prebuilt replacement.
    pub insertion: Option<Insertion>,
}

#[derive(Clone, Debug)]
pub struct Insertion {
    pub level: usize,
    pub terms: Vec<(Vec<Slice>, Scalar)>,
    pub note: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    Reducing,
    Bidirectional,
}

#[derive(Clone, Debug)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub displayed: bool,
    pub orientation: Orientation,
}

pub const FAMILIES: &[FamilyInfo] = &[
    FamilyInfo { name: "eq_biadjoint1", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_biadjoint2", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_cyclic_dot", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_cyclic", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_crossl", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_crossr", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_r2", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_dot_slide_ii", displayed: true, orientation: Orientation::Bidirectional },
    FamilyInfo { name: "eq_dot_slide_ij", displayed: true, orientation: Orientation::Bidirectional },
    FamilyInfo { name: "eq_r3_easy", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "eq_r3_hard", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "mixed_rel", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "bubble_positivity", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "bubble_degree_zero", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "fake_bubble_expand", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "grassmannian_elim", displayed: true, orientation: Orientation::Reducing },
    FamilyInfo { name: "extended_sl2", displayed: true, orientation: Orientation::Reducing },
    // Derived families: scalar-free isotopy moves and definitional packaging.
    FamilyInfo { name: "bubble_collect", displayed: false, orientation: Orientation::Reducing },
    FamilyInfo { name: "dot_bend", displayed: false, orientation: Orientation::Bidirectional },
    FamilyInfo { name: "cross_bend", displayed: false, orientation: Orientation::Bidirectional },
    FamilyInfo { name: "curl_eval", displayed: false, orientation: Orientation::Reducing },
];

pub fn family_id(name: &str) -> Option<usize> {
    FAMILIES.iter().position(|f| f.name == name)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tier {
    T1,
    T2,
    T3,
    /// T3 plus the derived curl-evaluation shortcuts.
    T3Extended,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NormalStatus {
    Normal,
    BudgetExceeded,
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub rule: String,
    pub dir: Dir,
    pub term: usize,
    pub slices: Vec<usize>,
    pub pos: usize,
    pub note: String,
}

#[derive(Clone, Debug, Default)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!(
                "RULE {} @ {}:{} {{term={} slices={} dir={}{}}}\n",
                s.rule,
                s.slices.first().copied().unwrap_or(0),
                s.pos,
                s.term,
                s.slices
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                s.dir,
                if s.note.is_empty() { String::new() } else { format!(" {}", s.note) },
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<RewriteTrace, RewriteError> {
        let mut steps = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix("RULE ")
                .ok_or_else(|| RewriteError::Other(format!("bad trace line: {}", line)))?;
            let (rule, rest) = rest
                .split_once(" @ ")
                .ok_or_else(|| RewriteError::Other(format!("bad trace line: {}", line)))?;
            let brace = rest
                .find('{')
                .ok_or_else(|| RewriteError::Other(format!("bad trace line: {}", line)))?;
            let body = rest[brace + 1..].trim_end_matches('}').to_string();
            let mut term = 0usize;
            let mut slices: Vec<usize> = Vec::new();
            let mut dir = Dir::Fwd;
            let mut note = String::new();
            for field in body.split_whitespace() {
                if let Some(v) = field.strip_prefix("term=") {
                    term = v.parse().map_err(|_| RewriteError::Other("bad term".into()))?;
                } else if let Some(v) = field.strip_prefix("slices=") {
                    if !v.is_empty() {
                        for part in v.split(',') {
                            slices.push(
                                part.trim()
                                    .parse()
                                    .map_err(|_| RewriteError::Other("bad slices".into()))?,
                            );
                        }
                    }
                } else if let Some(v) = field.strip_prefix("dir=") {
                    dir = if v == "bwd" { Dir::Bwd } else { Dir::Fwd };
                } else {
                    note.push_str(field);
                    note.push(' ');
                }
            }
            steps.push(TraceStep {
                rule: rule.to_string(),
                dir,
                term,
                slices,
                pos: 0,
                note: note.trim().to_string(),
            });
        }
        Ok(RewriteTrace { steps })
    }
}

#[derive(Clone, Debug)]
pub enum ProveResult {
    Proved(RewriteTrace),
    Unknown,
}

/// The installed relation catalogue over a fixed theory.
pub struct RuleSet {
    pub theory: Theory,
    /// Proof-search beam width.
    pub beam: usize,
    /// Step budget for T3 normalization.
    pub t3_budget: usize,
}

impl RuleSet {
    /// Install the catalogue, checking degree homogeneity of every family on
    /// systematically generated instances. Any inhomogeneous rule aborts
    /// the installation naming the rule.
    pub fn install(theory: Theory) -> Result<RuleSet, RewriteError> {
        let rs = RuleSet {
            theory,
            beam: 600,
            t3_budget: 4000,
        };
        let report = rs.homogeneity_report(2)?;
        for (name, ok, detail) in &report {
            // Families with no instances over this datum (e.g. distinct-color
            // rules on rank 1) are vacuously homogeneous.
            if !ok && detail != "no instances generated" {
                return Err(RewriteError::Install(format!(
                    "relation family {} is not degree-homogeneous: {}",
                    name, detail
                )));
            }
        }
        Ok(rs)
    }

    pub fn displayed_family_count(&self) -> usize {
        FAMILIES.iter().filter(|f| f.displayed).count()
    }

    /// For every family, exercise it on seed diagrams over all colors and a
    /// window of weights, checking each rewrite preserves the degree.
    /// Returns (family, homogeneous, detail) triples.
    pub fn homogeneity_report(
        &self,
        window: i64,
    ) -> Result<Vec<(&'static str, bool, String)>, RewriteError> {
        let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
        let mut bad: BTreeMap<usize, String> = BTreeMap::new();
        for d in seed_diagrams(&self.theory, window) {
            let degree = match d.degree(&self.theory.datum) {
                Ok(v) => v,
                Err(e) => return Err(RewriteError::Other(e.to_string())),
            };
            let w = Wiring::build(&d);
            for fam in 0..FAMILIES.len() {
                for m in self.find_family(&d, &w, fam, Dir::Fwd) {
                    let replaced = match self.apply_match(&d, &m) {
                        Ok(r) => r,
                        Err(_) => continue,
                    };
                    *hits.entry(fam).or_insert(0) += 1;
                    for rd in replaced.terms.keys() {
                        let rdeg = rd.degree(&self.theory.datum).map_err(RewriteError::Diagram)?;
                        if rdeg != degree {
                            bad.entry(fam).or_insert_with(|| {
                                format!(
                                    "lhs degree {} vs rhs degree {} on {}",
                                    degree,
                                    rdeg,
                                    seq_to_string(&d.source)
                                )
                            });
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (fam, info) in FAMILIES.iter().enumerate() {
            let h = hits.get(&fam).copied().unwrap_or(0);
            if let Some(detail) = bad.get(&fam) {
                out.push((info.name, false, detail.clone()));
            } else if h == 0 {
                out.push((info.name, false, "no instances generated".to_string()));
            } else {
                out.push((info.name, true, format!("{} instances", h)));
            }
        }
        Ok(out)
    }

    // ------------------------------------------------------------------
    // matching
    // ------------------------------------------------------------------

    /// All matches of one family on a diagram.
    pub fn find_family(&self, d: &Diagram, w: &Wiring, fam: usize, dir: Dir) -> Vec<Match> {
        let th = &self.theory;
        let mut out = Vec::new();
        let mk = |slices: Vec<usize>| Match {
            family: fam,
            dir,
            slices,
            insertion: None,
        };
        match (FAMILIES[fam].name, dir) {
            ("eq_biadjoint1", Dir::Fwd) => {
                for (k, s) in d.slices.iter().enumerate() {
                    if let Gen::CapFE { i } = s.gen {
                        // E-zigzag: cap(+i external, -i from a CupEF)
                        if let Some(c) = w.producer[w.in_segs[k][1]] {
                            if d.slices[c].gen == (Gen::CupEF { i })
                                && w.in_segs[k][1] == w.out_segs[c][0]
                                && w.external(w.in_segs[k][0], &[c, k])
                            {
                                out.push(mk(vec![c.min(k), c.max(k)]));
                            }
                        }
                        // F-zigzag: cap(+i from a CupEF, -i external)
                        if let Some(c) = w.producer[w.in_segs[k][0]] {
                            if d.slices[c].gen == (Gen::CupEF { i })
                                && w.in_segs[k][0] == w.out_segs[c][1]
                                && w.external(w.in_segs[k][1], &[c, k])
                            {
                                out.push(mk(vec![c.min(k), c.max(k)]));
                            }
                        }
                    }
                }
            }
            ("eq_biadjoint2", Dir::Fwd) => {
                for (k, s) in d.slices.iter().enumerate() {
                    if let Gen::CapEF { i } = s.gen {
                        if let Some(c) = w.producer[w.in_segs[k][0]] {
                            if d.slices[c].gen == (Gen::CupFE { i })
                                && w.in_segs[k][0] == w.out_segs[c][1]
                                && w.external(w.in_segs[k][1], &[c, k])
                            {
                                out.push(mk(vec![c.min(k), c.max(k)]));
                            }
                        }
                        if let Some(c) = w.producer[w.in_segs[k][1]] {
                            if d.slices[c].gen == (Gen::CupFE { i })
                                && w.in_segs[k][1] == w.out_segs[c][0]
                                && w.external(w.in_segs[k][0], &[c, k])
                            {
                                out.push(mk(vec![c.min(k), c.max(k)]));
                            }
                        }
                    }
                }
            }
            ("eq_biadjoint1", Dir::Bwd) | ("eq_biadjoint2", Dir::Bwd) => {}
            ("eq_cyclic_dot", Dir::Fwd) => {
                // [cup; dot on one fresh leg; cap closing the dotted leg with
                // an external strand] -> dot on the external strand.
                for (dk, s) in d.slices.iter().enumerate() {
                    let Gen::Dot { i, .. } = s.gen else { continue };
                    let Some(c) = w.producer[w.in_segs[dk][0]] else { continue };
                    let Some(kk) = w.consumer[w.out_segs[dk][0]] else { continue };
                    if c == kk {
                        continue;
                    }
                    let dseg_in = w.in_segs[dk][0];
                    let dseg_out = w.out_segs[dk][0];
                    let block = [c, dk, kk];
                    let ok = match (d.slices[c].gen, d.slices[kk].gen) {
                        (Gen::CupFE { i: a }, Gen::CapEF { i: b }) => {
                            a == i
                                && b == i
                                && ((dseg_in == w.out_segs[c][0]
                                    && w.in_segs[kk][1] == dseg_out
                                    && w.external(w.in_segs[kk][0], &block))
                                    || (dseg_in == w.out_segs[c][1]
                                        && w.in_segs[kk][0] == dseg_out
                                        && w.external(w.in_segs[kk][1], &block)))
                        }
                        (Gen::CupEF { i: a }, Gen::CapFE { i: b }) => {
                            a == i
                                && b == i
                                && ((dseg_in == w.out_segs[c][1]
                                    && w.in_segs[kk][0] == dseg_out
                                    && w.external(w.in_segs[kk][1], &block))
                                    || (dseg_in == w.out_segs[c][0]
                                        && w.in_segs[kk][1] == dseg_out
                                        && w.external(w.in_segs[kk][0], &block)))
                        }
                        _ => false,
                    };
                    if ok {
                        let mut b = vec![c, dk, kk];
                        b.sort();
                        out.push(mk(b));
                    }
                }
            }
            ("eq_cyclic_dot", Dir::Bwd) => {
                for (dk, s) in d.slices.iter().enumerate() {
                    if matches!(s.gen, Gen::Dot { .. }) {
                        out.push(mk(vec![dk]));
                    }
                }
            }
            ("eq_cyclic", Dir::Fwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if !is_crossing(&s.gen) {
                        continue;
                    }
                    let (i0, i1) = (w.in_segs[xk][0], w.in_segs[xk][1]);
                    let (o0, o1) = (w.out_segs[xk][0], w.out_segs[xk][1]);
                    let (Some(c1), Some(c2), Some(k1), Some(k2)) = (
                        w.producer[i0],
                        w.producer[i1],
                        w.consumer[o0],
                        w.consumer[o1],
                    ) else {
                        continue;
                    };
                    if c1 == c2 || k1 == k2 || c1 == xk || c2 == xk {
                        continue;
                    }
                    if !(is_cup(&d.slices[c1].gen)
                        && is_cup(&d.slices[c2].gen)
                        && is_cap(&d.slices[k1].gen)
                        && is_cap(&d.slices[k2].gen))
                    {
                        continue;
                    }
                    let block = [c1, c2, xk, k1, k2];
                    // rot_R: inputs are first cup legs, caps consume
                    // (external, crossing output).
                    let rot_r = w.out_segs[c1][0] == i0
                        && w.out_segs[c2][0] == i1
                        && w.in_segs[k1][1] == o0
                        && w.in_segs[k2][1] == o1
                        && w.external(w.in_segs[k1][0], &block)
                        && w.external(w.in_segs[k2][0], &block);
                    // rot_L: inputs are second cup legs, caps consume
                    // (crossing output, external).
                    let rot_l = w.out_segs[c1][1] == i0
                        && w.out_segs[c2][1] == i1
                        && w.in_segs[k1][0] == o0
                        && w.in_segs[k2][0] == o1
                        && w.external(w.in_segs[k1][1], &block)
                        && w.external(w.in_segs[k2][1], &block);
                    if rot_r || rot_l {
                        let mut b = block.to_vec();
                        b.sort();
                        let m = mk(b);
                        if self.rewrite_block_check(d, &m) {
                            out.push(m);
                        }
                    }
                }
            }
            ("eq_cyclic", Dir::Bwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if is_crossing(&s.gen) {
                        out.push(mk(vec![xk]));
                    }
                }
            }
            ("eq_crossl", Dir::Fwd) | ("eq_crossr", Dir::Fwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if !matches!(s.gen, Gen::CrossUU { .. } | Gen::CrossDD { .. }) {
                        continue;
                    }
                    for port in 0..2 {
                        let Some(c) = w.producer[w.in_segs[xk][port]] else { continue };
                        if !is_cup(&d.slices[c].gen) || c == xk {
                            continue;
                        }
                        for oport in 0..2 {
                            let Some(kk) = w.consumer[w.out_segs[xk][oport]] else { continue };
                            if !is_cap(&d.slices[kk].gen) || kk == c || kk == xk {
                                continue;
                            }
                            let mut b = vec![c, xk, kk];
                            b.sort();
                            let m = mk(b);
                            if self.rewrite_block_check(d, &m) {
                                out.push(m);
                            }
                        }
                    }
                }
            }
            ("eq_crossl", Dir::Bwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if matches!(s.gen, Gen::CrossEF { .. }) {
                        out.push(mk(vec![xk]));
                    }
                }
            }
            ("eq_crossr", Dir::Bwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if matches!(s.gen, Gen::CrossFE { .. }) {
                        out.push(mk(vec![xk]));
                    }
                }
            }
            ("eq_r2", Dir::Fwd) => {
                for (x1, s) in d.slices.iter().enumerate() {
                    if !matches!(s.gen, Gen::CrossUU { .. } | Gen::CrossDD { .. }) {
                        continue;
                    }
                    let Some(x2) = w.consumer[w.out_segs[x1][0]] else { continue };
                    if x2 == x1 || w.consumer[w.out_segs[x1][1]] != Some(x2) {
                        continue;
                    }
                    if std::mem::discriminant(&d.slices[x2].gen) != std::mem::discriminant(&s.gen) {
                        continue;
                    }
                    if w.in_segs[x2][0] == w.out_segs[x1][0] && w.in_segs[x2][1] == w.out_segs[x1][1]
                    {
                        out.push(mk(vec![x1, x2]));
                    }
                }
            }
            ("eq_dot_slide_ii", Dir::Fwd) | ("eq_dot_slide_ij", Dir::Fwd) => {
                let want_equal = FAMILIES[fam].name == "eq_dot_slide_ii";
                for (dk, s) in d.slices.iter().enumerate() {
                    let Gen::Dot { i, .. } = s.gen else { continue };
                    let Some(xk) = w.consumer[w.out_segs[dk][0]] else { continue };
                    let xg = d.slices[xk].gen;
                    if !is_crossing(&xg) {
                        continue;
                    }
                    let port = if w.in_segs[xk][0] == w.out_segs[dk][0] { 0 } else { 1 };
                    let crossed = other_color(&xg, 1 - port);
                    let applicable = if want_equal {
                        crossed == i && matches!(xg, Gen::CrossUU { .. } | Gen::CrossDD { .. })
                    } else {
                        crossed != i
                    };
                    if applicable {
                        out.push(mk(vec![dk, xk]));
                    }
                }
            }
            ("eq_dot_slide_ii", Dir::Bwd) | ("eq_dot_slide_ij", Dir::Bwd) => {
                let want_equal = FAMILIES[fam].name == "eq_dot_slide_ii";
                for (xk, s) in d.slices.iter().enumerate() {
                    let xg = s.gen;
                    if !is_crossing(&xg) {
                        continue;
                    }
                    for port in 0..2 {
                        let Some(dk) = w.consumer[w.out_segs[xk][port]] else { continue };
                        let Gen::Dot { i, .. } = d.slices[dk].gen else { continue };
                        if w.in_segs[dk][0] != w.out_segs[xk][port] {
                            continue;
                        }
                        // the generator the dotted strand crossed came in on
                        // the opposite port
                        let crossed = other_color(&xg, port);
                        let applicable = if want_equal {
                            crossed == i && matches!(xg, Gen::CrossUU { .. } | Gen::CrossDD { .. })
                        } else {
                            crossed != i
                        };
                        if applicable {
                            out.push(mk(vec![xk, dk]));
                        }
                    }
                }
            }
            ("eq_r3_easy", Dir::Fwd) | ("eq_r3_hard", Dir::Fwd) => {
                let hard = FAMILIES[fam].name == "eq_r3_hard";
                for (x1, s1) in d.slices.iter().enumerate() {
                    let up = match s1.gen {
                        Gen::CrossUU { .. } => true,
                        Gen::CrossDD { .. } => false,
                        _ => continue,
                    };
                    let Some(x2) = w.consumer[w.out_segs[x1][1]] else { continue };
                    if x2 == x1 || !same_updown(&d.slices[x2].gen, up) {
                        continue;
                    }
                    if w.in_segs[x2][0] != w.out_segs[x1][1] {
                        continue;
                    }
                    let Some(x3) = w.consumer[w.out_segs[x1][0]] else { continue };
                    if x3 == x2 || x3 == x1 || !same_updown(&d.slices[x3].gen, up) {
                        continue;
                    }
                    if w.in_segs[x3][0] != w.out_segs[x1][0]
                        || w.in_segs[x3][1] != w.out_segs[x2][0]
                    {
                        continue;
                    }
                    let (ci, cj) = cross_colors(&s1.gen);
                    let ck = other_color(&d.slices[x2].gen, 1);
                    let is_hard = ci == ck && self.theory.datum.a(ci, cj) < 0;
                    if is_hard == hard {
                        out.push(mk(vec![x1, x2, x3]));
                    }
                }
            }
            ("eq_r3_easy", Dir::Bwd) | ("eq_r3_hard", Dir::Bwd) => {}
            ("mixed_rel", Dir::Fwd) => {
                for (x1, s1) in d.slices.iter().enumerate() {
                    let ij = match s1.gen {
                        Gen::CrossEF { i, j } if i != j => Some((i, j, true)),
                        Gen::CrossFE { i, j } if i != j => Some((i, j, false)),
                        _ => None,
                    };
                    let Some((i, j, ef_first)) = ij else { continue };
                    let Some(x2) = w.consumer[w.out_segs[x1][0]] else { continue };
                    if x2 == x1
                        || w.consumer[w.out_segs[x1][1]] != Some(x2)
                        || w.in_segs[x2][0] != w.out_segs[x1][0]
                    {
                        continue;
                    }
                    let want = if ef_first {
                        Gen::CrossFE { i: j, j: i }
                    } else {
                        Gen::CrossEF { i: j, j: i }
                    };
                    if d.slices[x2].gen == want {
                        out.push(mk(vec![x1, x2]));
                    }
                }
            }
            ("mixed_rel", Dir::Bwd) => {}
            ("extended_sl2", Dir::Fwd) => {
                for (x1, s1) in d.slices.iter().enumerate() {
                    let same = match s1.gen {
                        Gen::CrossEF { i, j } if i == j => Some((i, true)),
                        Gen::CrossFE { i, j } if i == j => Some((i, false)),
                        _ => None,
                    };
                    let Some((i, ef_first)) = same else { continue };
                    let Some(x2) = w.consumer[w.out_segs[x1][0]] else { continue };
                    if x2 == x1
                        || w.consumer[w.out_segs[x1][1]] != Some(x2)
                        || w.in_segs[x2][0] != w.out_segs[x1][0]
                    {
                        continue;
                    }
                    let want = if ef_first {
                        Gen::CrossFE { i, j: i }
                    } else {
                        Gen::CrossEF { i, j: i }
                    };
                    if d.slices[x2].gen == want {
                        out.push(mk(vec![x1, x2]));
                    }
                }
            }
            ("extended_sl2", Dir::Bwd) => {}
            ("bubble_positivity", Dir::Fwd)
            | ("bubble_degree_zero", Dir::Fwd)
            | ("fake_bubble_expand", Dir::Fwd)
            | ("grassmannian_elim", Dir::Fwd) => {
                for (k, s) in d.slices.iter().enumerate() {
                    let Gen::Bubble { i, cw, dots } = s.gen else { continue };
                    let region =
                        Diagram::region_of_gap(&th.datum, &w.levels[k], &d.lambda, s.pos);
                    let h = th.pairing(i, &region);
                    let spade = if cw { h - 1 } else { -h - 1 };
                    let m = dots - spade;
                    let canonical_cw = h >= 1;
                    let case = if m < 0 {
                        "bubble_positivity"
                    } else if m == 0 {
                        "bubble_degree_zero"
                    } else if dots < 0 {
                        "fake_bubble_expand"
                    } else if cw != canonical_cw {
                        "grassmannian_elim"
                    } else {
                        continue;
                    };
                    if case == FAMILIES[fam].name {
                        out.push(mk(vec![k]));
                    }
                }
            }
            ("bubble_collect", Dir::Fwd) => {
                for (c, s) in d.slices.iter().enumerate() {
                    let (i, cw) = match s.gen {
                        Gen::CupFE { i } => (i, true),
                        Gen::CupEF { i } => (i, false),
                        _ => continue,
                    };
                    let mut block = vec![c];
                    let mut end0 = w.out_segs[c][0];
                    while let Some(dk) = w.consumer[end0] {
                        if matches!(d.slices[dk].gen, Gen::Dot { .. }) {
                            block.push(dk);
                            end0 = w.out_segs[dk][0];
                        } else {
                            break;
                        }
                    }
                    let mut end1 = w.out_segs[c][1];
                    while let Some(dk) = w.consumer[end1] {
                        if matches!(d.slices[dk].gen, Gen::Dot { .. }) && !block.contains(&dk) {
                            block.push(dk);
                            end1 = w.out_segs[dk][0];
                        } else {
                            break;
                        }
                    }
                    let (Some(k0), Some(k1)) = (w.consumer[end0], w.consumer[end1]) else {
                        continue;
                    };
                    if k0 != k1 {
                        continue;
                    }
                    let want = if cw { Gen::CapFE { i } } else { Gen::CapEF { i } };
                    if d.slices[k0].gen == want
                        && w.in_segs[k0][0] == end0
                        && w.in_segs[k0][1] == end1
                    {
                        block.push(k0);
                        block.sort();
                        let m = mk(block);
                        if self.rewrite_block_check(d, &m) {
                            out.push(m);
                        }
                    }
                }
            }
            ("bubble_collect", Dir::Bwd) => {}
            ("dot_bend", Dir::Fwd) | ("dot_bend", Dir::Bwd) => {
                let leg = if dir == Dir::Fwd { 0 } else { 1 };
                for (c, s) in d.slices.iter().enumerate() {
                    if is_cup(&s.gen) {
                        if let Some(dk) = w.consumer[w.out_segs[c][leg]] {
                            if matches!(d.slices[dk].gen, Gen::Dot { .. }) {
                                out.push(mk(vec![c.min(dk), c.max(dk)]));
                            }
                        }
                    }
                    if is_cap(&s.gen) {
                        if let Some(dk) = w.producer[w.in_segs[c][leg]] {
                            if matches!(d.slices[dk].gen, Gen::Dot { .. }) {
                                out.push(mk(vec![c.min(dk), c.max(dk)]));
                            }
                        }
                    }
                }
            }
            ("cross_bend", Dir::Fwd) => {
                for (xk, s) in d.slices.iter().enumerate() {
                    if !is_crossing(&s.gen) {
                        continue;
                    }
                    for port in 0..2 {
                        if let Some(kk) = w.consumer[w.out_segs[xk][port]] {
                            if kk != xk && is_cap(&d.slices[kk].gen) {
                                let m = mk(vec![xk.min(kk), xk.max(kk)]);
                                if self.rewrite_block_check(d, &m) {
                                    out.push(m);
                                }
                            }
                        }
                        if let Some(ck) = w.producer[w.in_segs[xk][port]] {
                            if ck != xk && is_cup(&d.slices[ck].gen) {
                                let m = mk(vec![ck.min(xk), ck.max(xk)]);
                                if self.rewrite_block_check(d, &m) {
                                    out.push(m);
                                }
                            }
                        }
                    }
                }
            }
            ("cross_bend", Dir::Bwd) => {}
            ("curl_eval", Dir::Fwd) => {
                for (c, s) in d.slices.iter().enumerate() {
                    let (i, left_curl) = match s.gen {
                        Gen::CupFE { i } => (i, true),
                        Gen::CupEF { i } => (i, false),
                        _ => continue,
                    };
                    let far_port = if left_curl { 1 } else { 0 };
                    let near_port = 1 - far_port;
                    let mut block = vec![c];
                    let mut far = w.out_segs[c][far_port];
                    while let Some(dk) = w.consumer[far] {
                        if matches!(d.slices[dk].gen, Gen::Dot { .. }) {
                            block.push(dk);
                            far = w.out_segs[dk][0];
                        } else {
                            break;
                        }
                    }
                    let near = w.out_segs[c][near_port];
                    let Some(xk) = w.consumer[near] else { continue };
                    let Gen::CrossUU { i: a, j: b } = d.slices[xk].gen else { continue };
                    if a != i || b != i || xk == c {
                        continue;
                    }
                    let Some(kk) = w.consumer[far] else { continue };
                    let want_cap = if left_curl { Gen::CapFE { i } } else { Gen::CapEF { i } };
                    if d.slices[kk].gen != want_cap || kk == xk {
                        continue;
                    }
                    let fits = if left_curl {
                        w.in_segs[xk][1] == near
                            && w.in_segs[kk][0] == w.out_segs[xk][1]
                            && w.in_segs[kk][1] == far
                            && w.external(w.in_segs[xk][0], &[c, xk, kk])
                    } else {
                        w.in_segs[xk][0] == near
                            && w.in_segs[kk][1] == w.out_segs[xk][0]
                            && w.in_segs[kk][0] == far
                            && w.external(w.in_segs[xk][1], &[c, xk, kk])
                    };
                    if fits {
                        block.push(xk);
                        block.push(kk);
                        block.sort();
                        let m = mk(block);
                        if self.rewrite_block_check(d, &m) {
                            out.push(m);
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Insertion moves (identity -> relation), used only in the proof search.
    pub fn insertions(&self, d: &Diagram, w: &Wiring) -> Vec<Match> {
        let th = &self.theory;
        let mut out = Vec::new();
        for (lvl, seq) in w.levels.iter().enumerate() {
            for x in 0..seq.len().saturating_sub(1) {
                let (a, b) = (seq[x], seq[x + 1]);
                if a.color == b.color && a.up == b.up {
                    // dot-slide insertion on equal parallel strands
                    let i = a.color;
                    let cross = if a.up {
                        Gen::CrossUU { i, j: i }
                    } else {
                        Gen::CrossDD { i, j: i }
                    };
                    let dot = Gen::Dot { i, up: a.up };
                    // up:   id = ψ(dot⊗1) − (1⊗dot)ψ
                    // down: id = (1⊗dot)ψ_dd − ψ_dd(dot⊗1)
                    let t1 = vec![Slice { pos: x, gen: dot }, Slice { pos: x, gen: cross }];
                    let t2 = vec![Slice { pos: x, gen: cross }, Slice { pos: x + 1, gen: dot }];
                    let (s1, s2) = if a.up { (t1, t2) } else { (t2, t1) };
                    out.push(Match {
                        family: family_id("eq_dot_slide_ii").unwrap(),
                        dir: Dir::Bwd,
                        slices: vec![],
                        insertion: Some(Insertion {
                            level: lvl,
                            terms: vec![(s1, Scalar::one()), (s2, Scalar::int(-1))],
                            note: format!("insert@{}:{}", lvl, x),
                        }),
                    });
                }
                if a.color != b.color && a.up != b.up {
                    let (i, j) = (a.color, b.color);
                    let (x1, x2) = if a.up {
                        (Gen::CrossEF { i, j }, Gen::CrossFE { i: j, j: i })
                    } else {
                        (Gen::CrossFE { i, j }, Gen::CrossEF { i: j, j: i })
                    };
                    out.push(Match {
                        family: family_id("mixed_rel").unwrap(),
                        dir: Dir::Bwd,
                        slices: vec![],
                        insertion: Some(Insertion {
                            level: lvl,
                            terms: vec![(
                                vec![Slice { pos: x, gen: x1 }, Slice { pos: x, gen: x2 }],
                                Scalar::one(),
                            )],
                            note: format!("insert@{}:{}", lvl, x),
                        }),
                    });
                }
                if a.color == b.color && a.up != b.up {
                    let i = a.color;
                    let region = Diagram::region_of_gap(&th.datum, seq, &d.lambda, x + 2);
                    let h = th.pairing(i, &region);
                    let (x1, x2, cap, cup, bound, bub_cw, dot_pos) = if a.up {
                        (
                            Gen::CrossEF { i, j: i },
                            Gen::CrossFE { i, j: i },
                            Gen::CapFE { i },
                            Gen::CupFE { i },
                            h - 1,
                            false,
                            x,
                        )
                    } else {
                        (
                            Gen::CrossFE { i, j: i },
                            Gen::CrossEF { i, j: i },
                            Gen::CapEF { i },
                            Gen::CupEF { i },
                            -h - 1,
                            true,
                            x + 1,
                        )
                    };
                    let mut terms = vec![(
                        vec![Slice { pos: x, gen: x1 }, Slice { pos: x, gen: x2 }],
                        Scalar::int(-1),
                    )];
                    if bound >= 0 {
                        if let Some(extra) =
                            self.sl2_sum_terms(i, &region, bound, bub_cw, cap, cup, x, dot_pos)
                        {
                            terms.extend(extra);
                        }
                    }
                    out.push(Match {
                        family: family_id("extended_sl2").unwrap(),
                        dir: Dir::Bwd,
                        slices: vec![],
                        insertion: Some(Insertion {
                            level: lvl,
                            terms,
                            note: format!("insert@{}:{}", lvl, x),
                        }),
                    });
                }
            }
            // biadjoint zigzag insertions on every single strand
            for x in 0..seq.len() {
                let e = seq[x];
                let (cu1, ca1, cu2, ca2) = if e.up {
                    (
                        Slice { pos: x + 1, gen: Gen::CupEF { i: e.color } },
                        Slice { pos: x, gen: Gen::CapFE { i: e.color } },
                        Slice { pos: x, gen: Gen::CupFE { i: e.color } },
                        Slice { pos: x + 1, gen: Gen::CapEF { i: e.color } },
                    )
                } else {
                    (
                        Slice { pos: x, gen: Gen::CupEF { i: e.color } },
                        Slice { pos: x + 1, gen: Gen::CapFE { i: e.color } },
                        Slice { pos: x + 1, gen: Gen::CupFE { i: e.color } },
                        Slice { pos: x, gen: Gen::CapEF { i: e.color } },
                    )
                };
                for (fam, cu, ca) in [("eq_biadjoint1", cu1, ca1), ("eq_biadjoint2", cu2, ca2)] {
                    out.push(Match {
                        family: family_id(fam).unwrap(),
                        dir: Dir::Bwd,
                        slices: vec![],
                        insertion: Some(Insertion {
                            level: lvl,
                            terms: vec![(vec![cu, ca], Scalar::one())],
                            note: format!("insert@{}:{}", lvl, x),
                        }),
                    });
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn sl2_sum_terms(
        &self,
        i: usize,
        region: &Weight,
        bound: i64,
        bub_cw: bool,
        cap: Gen,
        cup: Gen,
        x: usize,
        dot_pos: usize,
    ) -> Option<Vec<(Vec<Slice>, Scalar)>> {
        let th = &self.theory;
        let up = dot_pos == x;
        let mut terms = Vec::new();
        for f1 in 0..=bound {
            for f2 in 0..=bound - f1 {
                let f3 = bound - f1 - f2;
                let poly = canonical_bubble(th, i, region, bub_cw, f2).ok()?;
                for (prod, coeff) in &poly.terms {
                    let mut slices = Vec::new();
                    for _ in 0..f3 {
                        slices.push(Slice { pos: dot_pos, gen: Gen::Dot { i, up } });
                    }
                    slices.push(Slice { pos: x, gen: cap });
                    for bsym in prod {
                        slices.push(Slice {
                            pos: x,
                            gen: Gen::Bubble {
                                i: bsym.i,
                                cw: bsym.cw,
                                dots: bsym.literal_dots(th, region),
                            },
                        });
                    }
                    slices.push(Slice { pos: x, gen: cup });
                    for _ in 0..f1 {
                        slices.push(Slice { pos: dot_pos, gen: Gen::Dot { i, up } });
                    }
                    terms.push((slices, coeff.clone()));
                }
            }
        }
        Some(terms)
    }

    fn rewrite_block_check(&self, d: &Diagram, m: &Match) -> bool {
        self.apply_match(d, m).is_ok()
    }

    // ------------------------------------------------------------------
    // applying
    // ------------------------------------------------------------------

    /// Apply a match to a diagram, producing the replacement morphism.
    pub fn apply_match(&self, d: &Diagram, m: &Match) -> Result<Morphism, RewriteError> {
        if let Some(ins) = &m.insertion {
            let mut out = Morphism::zero(d.source.clone(), d.target(), d.lambda.clone());
            for (slices, coeff) in &ins.terms {
                let mut all = d.slices[..ins.level].to_vec();
                all.extend(slices.iter().copied());
                all.extend(d.slices[ins.level..].iter().copied());
                let nd = Diagram::new(d.source.clone(), d.lambda.clone(), all)?;
                out.insert(nd, coeff.clone());
            }
            return Ok(out);
        }
        let mut tagged: Vec<(usize, Slice)> = d.slices.iter().copied().enumerate().collect();
        let ids = &m.slices;
        fn pos_of(tagged: &[(usize, Slice)], orig: usize) -> usize {
            tagged.iter().position(|(o, _)| *o == orig).unwrap()
        }
        for k in 1..ids.len() {
            let dest = pos_of(&tagged, ids[k - 1]) + 1;
            let cur = pos_of(&tagged, ids[k]);
            if cur < dest {
                return Err(RewriteError::Other("match block out of order".into()));
            }
            for c in (dest..cur).rev() {
                let below = tagged[c];
                let above = tagged[c + 1];
                match Diagram::try_swap(&below.1, &above.1) {
                    Some((down, up)) => {
                        tagged[c] = (above.0, down);
                        tagged[c + 1] = (below.0, up);
                    }
                    None => {
                        return Err(RewriteError::Other(
                            "matched block cannot be made contiguous".into(),
                        ))
                    }
                }
            }
        }
        let base = if ids.is_empty() { 0 } else { pos_of(&tagged, ids[0]) };
        let len = ids.len();
        let reordered: Vec<Slice> = tagged.iter().map(|(_, s)| *s).collect();
        let head = Diagram {
            source: d.source.clone(),
            lambda: d.lambda.clone(),
            slices: reordered[..base].to_vec(),
        };
        head.check()?;
        let level_seq = head.target();
        let block = &reordered[base..base + len];
        let terms = self
            .rewrite_block(m.family, m.dir, block, &level_seq, &d.lambda)
            .ok_or_else(|| RewriteError::NoMatch {
                rule: FAMILIES[m.family].name.to_string(),
                term: 0,
                slices: m.slices.clone(),
            })?;
        let mut out = Morphism::zero(d.source.clone(), d.target(), d.lambda.clone());
        for (slices, coeff) in terms {
            let mut all = reordered[..base].to_vec();
            all.extend(slices);
            all.extend(reordered[base + len..].iter().copied());
            let nd = Diagram::new(d.source.clone(), d.lambda.clone(), all)?;
            out.insert(nd, coeff);
        }
        Ok(out)
    }

    /// Build the replacement for a contiguous block. None when the block does
    /// not have the family's exact shape.
    fn rewrite_block(
        &self,
        fam: usize,
        dir: Dir,
        block: &[Slice],
        level_seq: &Seq,
        lambda: &Weight,
    ) -> Option<Vec<(Vec<Slice>, Scalar)>> {
        let th = &self.theory;
        let name = FAMILIES[fam].name;
        match (name, dir) {
            ("eq_biadjoint1", Dir::Fwd) | ("eq_biadjoint2", Dir::Fwd) => {
                let [a, b] = block else { return None };
                if is_cup(&a.gen) && is_cap(&b.gen) {
                    Some(vec![(vec![], Scalar::one())])
                } else {
                    None
                }
            }
            ("eq_cyclic_dot", Dir::Fwd) => {
                let [c, dd, k] = block else { return None };
                if !is_cup(&c.gen) || !is_cap(&k.gen) {
                    return None;
                }
                let Gen::Dot { i, .. } = dd.gen else { return None };
                // The external strand holds the block's single source entry:
                // at block level the sequence around position k.pos carries it.
                let ext_pos = k.pos.min(c.pos);
                let e = *level_seq.get(ext_pos)?;
                if e.color != i {
                    return None;
                }
                Some(vec![(
                    vec![Slice { pos: ext_pos, gen: Gen::Dot { i, up: e.up } }],
                    Scalar::one(),
                )])
            }
            ("eq_cyclic_dot", Dir::Bwd) => {
                let [dd] = block else { return None };
                let Gen::Dot { i, up } = dd.gen else { return None };
                let p = dd.pos;
                let (cup, cap) = if up {
                    (Gen::CupEF { i }, Gen::CapFE { i })
                } else {
                    (Gen::CupFE { i }, Gen::CapEF { i })
                };
                Some(vec![(
                    vec![
                        Slice { pos: p + 1, gen: cup },
                        Slice { pos: p + 1, gen: Gen::Dot { i, up: !up } },
                        Slice { pos: p, gen: cap },
                    ],
                    Scalar::one(),
                )])
            }
            ("eq_cyclic", Dir::Fwd) => {
                if block.len() != 5 {
                    return None;
                }
                let x = block.iter().find(|s| is_crossing(&s.gen))?;
                let partner = rotate_crossing(&x.gen);
                let caps: Vec<&Slice> = block.iter().filter(|s| is_cap(&s.gen)).collect();
                if caps.len() != 2 || block.iter().filter(|s| is_cup(&s.gen)).count() != 2 {
                    return None;
                }
                let pos = caps.iter().map(|s| s.pos).min().unwrap();
                Some(vec![(vec![Slice { pos, gen: partner }], Scalar::one())])
            }
            ("eq_cyclic", Dir::Bwd) => {
                let [x] = block else { return None };
                if !is_crossing(&x.gen) {
                    return None;
                }
                let partner = rotate_crossing(&x.gen);
                let p = x.pos;
                let psrc = partner.in_seq();
                let ptgt = partner.out_seq();
                let mut slices = Vec::new();
                for (k, e) in psrc.iter().enumerate() {
                    let gen = if e.up { Gen::CupFE { i: e.color } } else { Gen::CupEF { i: e.color } };
                    slices.push(Slice { pos: p + 2 + k, gen });
                }
                slices.push(Slice { pos: p + 2, gen: partner });
                for (k, e) in ptgt.iter().enumerate() {
                    let gen = if e.up { Gen::CapEF { i: e.color } } else { Gen::CapFE { i: e.color } };
                    slices.push(Slice { pos: p + 1 - k, gen });
                }
                Some(vec![(slices, Scalar::one())])
            }
            ("eq_crossl", Dir::Fwd) | ("eq_crossr", Dir::Fwd) => {
                let [a, b, c] = block else { return None };
                // block is sorted by original index; identify the roles
                let cup = [a, b, c].into_iter().find(|s| is_cup(&s.gen))?;
                let x = [a, b, c].into_iter().find(|s| is_crossing(&s.gen))?;
                let cap = [a, b, c].into_iter().find(|s| is_cap(&s.gen))?;
                let crossl = name == "eq_crossl";
                let sideways = ninety_degree_shape(cup, x, cap, crossl)?;
                Some(vec![(
                    vec![Slice { pos: cap.pos.min(cup.pos), gen: sideways }],
                    Scalar::one(),
                )])
            }
            ("eq_crossl", Dir::Bwd) => {
                let [x] = block else { return None };
                let Gen::CrossEF { i: a, j: b } = x.gen else { return None };
                let p = x.pos;
                Some(vec![(
                    vec![
                        Slice { pos: p, gen: Gen::CupEF { i: b } },
                        Slice { pos: p + 1, gen: Gen::CrossUU { i: b, j: a } },
                        Slice { pos: p + 2, gen: Gen::CapFE { i: b } },
                    ],
                    Scalar::one(),
                )])
            }
            ("eq_crossr", Dir::Bwd) => {
                let [x] = block else { return None };
                let Gen::CrossFE { i: a, j: b } = x.gen else { return None };
                let p = x.pos;
                Some(vec![(
                    vec![
                        Slice { pos: p + 2, gen: Gen::CupFE { i: a } },
                        Slice { pos: p + 1, gen: Gen::CrossUU { i: b, j: a } },
                        Slice { pos: p, gen: Gen::CapEF { i: a } },
                    ],
                    Scalar::one(),
                )])
            }
            ("eq_r2", Dir::Fwd) => {
                let [x1, x2] = block else { return None };
                if x1.pos != x2.pos {
                    return None;
                }
                let p = x1.pos;
                let (i, j, up) = match (x1.gen, x2.gen) {
                    (Gen::CrossUU { i, j }, Gen::CrossUU { i: j2, j: i2 }) if i2 == i && j2 == j => {
                        (i, j, true)
                    }
                    (Gen::CrossDD { i, j }, Gen::CrossDD { i: j2, j: i2 }) if i2 == i && j2 == j => {
                        (i, j, false)
                    }
                    _ => return None,
                };
                let mut terms = Vec::new();
                for (dp, dq, coeff) in th.q.q_poly(&th.datum, i, j) {
                    let mut slices = Vec::new();
                    for _ in 0..dp {
                        slices.push(Slice { pos: p, gen: Gen::Dot { i, up } });
                    }
                    for _ in 0..dq {
                        slices.push(Slice { pos: p + 1, gen: Gen::Dot { i: j, up } });
                    }
                    terms.push((slices, coeff));
                }
                Some(terms)
            }
            ("eq_dot_slide_ii", Dir::Fwd) => {
                let [dd, x] = block else { return None };
                let Gen::Dot { i, up } = dd.gen else { return None };
                if !is_crossing(&x.gen) {
                    return None;
                }
                let p = x.pos;
                let port = if dd.pos == p { 0usize } else { 1 };
                let sign = match (up, port) {
                    (true, 0) => 1,
                    (true, 1) => -1,
                    (false, 0) => -1,
                    _ => 1,
                };
                let dot_above = Slice { pos: p + 1 - port, gen: Gen::Dot { i, up } };
                Some(vec![
                    (vec![Slice { pos: p, gen: x.gen }, dot_above], Scalar::one()),
                    (vec![], Scalar::int(sign)),
                ])
            }
            ("eq_dot_slide_ii", Dir::Bwd) => {
                let [x, dd] = block else { return None };
                let Gen::Dot { i, up } = dd.gen else { return None };
                if !is_crossing(&x.gen) {
                    return None;
                }
                let p = x.pos;
                let port = if dd.pos == p { 0usize } else { 1 };
                let sign = match (up, port) {
                    (true, 1) => 1,
                    (true, 0) => -1,
                    (false, 1) => -1,
                    _ => 1,
                };
                let dot_below = Slice { pos: p + 1 - port, gen: Gen::Dot { i, up } };
                Some(vec![
                    (vec![dot_below, Slice { pos: p, gen: x.gen }], Scalar::one()),
                    (vec![], Scalar::int(sign)),
                ])
            }
            ("eq_dot_slide_ij", Dir::Fwd) => {
                let [dd, x] = block else { return None };
                let Gen::Dot { i, up } = dd.gen else { return None };
                if !is_crossing(&x.gen) {
                    return None;
                }
                let p = x.pos;
                let port = if dd.pos == p { 0usize } else { 1 };
                let dot_above = Slice { pos: p + 1 - port, gen: Gen::Dot { i, up } };
                Some(vec![(vec![Slice { pos: p, gen: x.gen }, dot_above], Scalar::one())])
            }
            ("eq_dot_slide_ij", Dir::Bwd) => {
                let [x, dd] = block else { return None };
                let Gen::Dot { i, up } = dd.gen else { return None };
                if !is_crossing(&x.gen) {
                    return None;
                }
                let p = x.pos;
                let port = if dd.pos == p { 0usize } else { 1 };
                let dot_below = Slice { pos: p + 1 - port, gen: Gen::Dot { i, up } };
                Some(vec![(vec![dot_below, Slice { pos: p, gen: x.gen }], Scalar::one())])
            }
            ("eq_r3_easy", Dir::Fwd) | ("eq_r3_hard", Dir::Fwd) => {
                let [x1, x2, x3] = block else { return None };
                if x1.pos != x3.pos || x2.pos != x1.pos + 1 {
                    return None;
                }
                let p = x1.pos;
                let up = matches!(x1.gen, Gen::CrossUU { .. });
                if level_seq.len() < p + 3 {
                    return None;
                }
                let src: Vec<Entry> = level_seq[p..p + 3].to_vec();
                let (ci, cj, ck) = (src[0].color, src[1].color, src[2].color);
                let mk_cross = |a: usize, b: usize| {
                    if up {
                        Gen::CrossUU { i: a, j: b }
                    } else {
                        Gen::CrossDD { i: a, j: b }
                    }
                };
                let braid = vec![
                    Slice { pos: p + 1, gen: mk_cross(cj, ck) },
                    Slice { pos: p, gen: mk_cross(ci, ck) },
                    Slice { pos: p + 1, gen: mk_cross(ci, cj) },
                ];
                if name == "eq_r3_easy" {
                    return Some(vec![(braid, Scalar::one())]);
                }
                let corr_sign = if up { 1 } else { -1 };
                let mut terms = vec![(braid, Scalar::one())];
                let dij = th.datum.d_off(ci, cj);
                for l1 in 0..dij {
                    let l2 = dij - 1 - l1;
                    let mut slices = Vec::new();
                    for _ in 0..l1 {
                        slices.push(Slice { pos: p, gen: Gen::Dot { i: ci, up } });
                    }
                    for _ in 0..l2 {
                        slices.push(Slice { pos: p + 2, gen: Gen::Dot { i: ci, up } });
                    }
                    terms.push((slices, th.q.t(ci, cj).scale_int(corr_sign)));
                }
                for (&(a, b, sp, sq), sval) in th.q.s_entries() {
                    if a != ci || b != cj || sval.is_zero() {
                        continue;
                    }
                    for l1 in 0..(sp as i64) {
                        let l2 = sp as i64 - 1 - l1;
                        let mut slices = Vec::new();
                        for _ in 0..l1 {
                            slices.push(Slice { pos: p, gen: Gen::Dot { i: ci, up } });
                        }
                        for _ in 0..sq {
                            slices.push(Slice { pos: p + 1, gen: Gen::Dot { i: cj, up } });
                        }
                        for _ in 0..l2 {
                            slices.push(Slice { pos: p + 2, gen: Gen::Dot { i: ci, up } });
                        }
                        terms.push((slices, sval.scale_int(corr_sign)));
                    }
                }
                Some(terms)
            }
            ("mixed_rel", Dir::Fwd) => {
                let [x1, x2] = block else { return None };
                if x1.pos != x2.pos {
                    return None;
                }
                let ok = matches!(
                    (x1.gen, x2.gen),
                    (Gen::CrossEF { .. }, Gen::CrossFE { .. })
                        | (Gen::CrossFE { .. }, Gen::CrossEF { .. })
                );
                if ok {
                    Some(vec![(vec![], Scalar::one())])
                } else {
                    None
                }
            }
            ("extended_sl2", Dir::Fwd) => {
                let [x1, x2] = block else { return None };
                if x1.pos != x2.pos {
                    return None;
                }
                let p = x1.pos;
                let (i, ef_first) = match (x1.gen, x2.gen) {
                    (Gen::CrossEF { i, j }, Gen::CrossFE { i: i2, j: j2 })
                        if i == j && i2 == i && j2 == i =>
                    {
                        (i, true)
                    }
                    (Gen::CrossFE { i, j }, Gen::CrossEF { i: i2, j: j2 })
                        if i == j && i2 == i && j2 == i =>
                    {
                        (i, false)
                    }
                    _ => return None,
                };
                let region = Diagram::region_of_gap(&th.datum, level_seq, lambda, p + 2);
                let h = th.pairing(i, &region);
                let mut terms = vec![(vec![], Scalar::int(-1))];
                let (bound, bub_cw, cap, cup, dot_pos) = if ef_first {
                    (h - 1, false, Gen::CapFE { i }, Gen::CupFE { i }, p)
                } else {
                    (-h - 1, true, Gen::CapEF { i }, Gen::CupEF { i }, p + 1)
                };
                if bound >= 0 {
                    let extra = self.sl2_sum_terms(i, &region, bound, bub_cw, cap, cup, p, dot_pos)?;
                    terms.extend(extra);
                }
                Some(terms)
            }
            ("bubble_positivity", Dir::Fwd)
            | ("bubble_degree_zero", Dir::Fwd)
            | ("fake_bubble_expand", Dir::Fwd)
            | ("grassmannian_elim", Dir::Fwd) => {
                let [b] = block else { return None };
                let Gen::Bubble { i, cw, dots } = b.gen else { return None };
                let region = Diagram::region_of_gap(&th.datum, level_seq, lambda, b.pos);
                let h = th.pairing(i, &region);
                let spade = if cw { h - 1 } else { -h - 1 };
                let m = dots - spade;
                if m < 0 {
                    return Some(vec![]);
                }
                let poly = canonical_bubble(th, i, &region, cw, m).ok()?;
                let mut terms = Vec::new();
                for (prod, coeff) in &poly.terms {
                    let slices: Vec<Slice> = prod
                        .iter()
                        .map(|s| Slice {
                            pos: b.pos,
                            gen: Gen::Bubble {
                                i: s.i,
                                cw: s.cw,
                                dots: s.literal_dots(th, &region),
                            },
                        })
                        .collect();
                    terms.push((slices, coeff.clone()));
                }
                Some(terms)
            }
            ("bubble_collect", Dir::Fwd) => {
                let cup = block.first()?;
                let cap = block.last()?;
                let (i, cw) = match cup.gen {
                    Gen::CupFE { i } => (i, true),
                    Gen::CupEF { i } => (i, false),
                    _ => return None,
                };
                if !is_cap(&cap.gen) {
                    return None;
                }
                let inner = &block[1..block.len() - 1];
                if !inner.iter().all(|s| matches!(s.gen, Gen::Dot { .. })) {
                    return None;
                }
                Some(vec![(
                    vec![Slice {
                        pos: cup.pos,
                        gen: Gen::Bubble { i, cw, dots: inner.len() as i64 },
                    }],
                    Scalar::one(),
                )])
            }
            ("dot_bend", Dir::Fwd) | ("dot_bend", Dir::Bwd) => {
                let [a, b] = block else { return None };
                if is_cup(&a.gen) {
                    let Gen::Dot { i, up } = b.gen else { return None };
                    let other = if b.pos == a.pos { a.pos + 1 } else { a.pos };
                    return Some(vec![(
                        vec![*a, Slice { pos: other, gen: Gen::Dot { i, up: !up } }],
                        Scalar::one(),
                    )]);
                }
                if is_cap(&b.gen) {
                    let Gen::Dot { i, up } = a.gen else { return None };
                    let other = if a.pos == b.pos { b.pos + 1 } else { b.pos };
                    return Some(vec![(
                        vec![Slice { pos: other, gen: Gen::Dot { i, up: !up } }, *b],
                        Scalar::one(),
                    )]);
                }
                None
            }
            ("cross_bend", Dir::Fwd) | ("cross_bend", Dir::Bwd) => {
                cross_bend_rewrite(block, level_seq)
            }
            ("curl_eval", Dir::Fwd) => {
                let cup = block.first()?;
                let (i, left_curl) = match cup.gen {
                    Gen::CupFE { i } => (i, true),
                    Gen::CupEF { i } => (i, false),
                    _ => return None,
                };
                let n_dots = block
                    .iter()
                    .filter(|s| matches!(s.gen, Gen::Dot { .. }))
                    .count() as i64;
                let loop_region = Diagram::region_of_gap(&th.datum, level_seq, lambda, cup.pos);
                let side = if left_curl {
                    crate::bubbles::CurlSide::Left
                } else {
                    crate::bubbles::CurlSide::Right
                };
                let value = crate::bubbles::curl_reduce(th, side, i, &loop_region, n_dots).ok()?;
                let sp = if left_curl { cup.pos.checked_sub(1)? } else { cup.pos };
                let mut terms = Vec::new();
                for (dterm, coeff) in &value.terms {
                    let slices: Vec<Slice> = dterm
                        .slices
                        .iter()
                        .map(|s| Slice { pos: s.pos + sp, gen: s.gen })
                        .collect();
                    terms.push((slices, coeff.clone()));
                }
                Some(terms)
            }
            _ => None,
        }
    }

    // ------------------------------------------------------------------
    // normalization and search
    // ------------------------------------------------------------------

    fn reducing_families(&self, tier: Tier) -> Vec<usize> {
        FAMILIES
            .iter()
            .enumerate()
            .filter(|(_, f)| f.orientation == Orientation::Reducing)
            .filter(|(_, f)| f.name != "curl_eval" || tier == Tier::T3Extended)
            .map(|(k, _)| k)
            .collect()
    }

    /// Tiered normalization. T1 is canonical form only; T2 runs the sector
    /// rules (KLR on upward diagrams, bubbles on End(1_λ)); T3 runs all
    /// reducing rules to a fixpoint within the step budget.
    pub fn normalize(&self, m: &Morphism, tier: Tier) -> (Morphism, NormalStatus, RewriteTrace) {
        if tier == Tier::T1 {
            return (m.clone(), NormalStatus::Normal, RewriteTrace::default());
        }
        if tier == Tier::T2 {
            let upward = m.source.iter().all(|e| e.up)
                && m.target.iter().all(|e| e.up)
                && !m.source.is_empty();
            if upward {
                return self.normalize_upward(m);
            }
        }
        let fams = self.reducing_families(tier);
        self.run_fixpoint(m, &fams, false)
    }

    fn run_fixpoint(
        &self,
        m: &Morphism,
        fams: &[usize],
        dots_down: bool,
    ) -> (Morphism, NormalStatus, RewriteTrace) {
        let mut cur = m.clone();
        let mut trace = RewriteTrace::default();
        let mut steps = 0usize;
        'outer: loop {
            if steps >= self.t3_budget {
                return (cur, NormalStatus::BudgetExceeded, trace);
            }
            let terms: Vec<Diagram> = cur.terms.keys().cloned().collect();
            for (tix, d) in terms.iter().enumerate() {
                let w = Wiring::build(d);
                let mut cands: Vec<Match> = Vec::new();
                for &fam in fams {
                    cands.extend(self.find_family(d, &w, fam, Dir::Fwd));
                }
                if dots_down {
                    for name in ["eq_dot_slide_ii", "eq_dot_slide_ij"] {
                        let fam = family_id(name).unwrap();
                        cands.extend(self.find_family(d, &w, fam, Dir::Bwd));
                    }
                }
                cands.sort_by(|a, b| (a.family, &a.slices).cmp(&(b.family, &b.slices)));
                for mm in cands {
                    if let Ok(rep) = self.apply_match(d, &mm) {
                        let coeff = cur.terms.get(d).cloned().unwrap_or_else(Scalar::zero);
                        cur.terms.remove(d);
                        for (nd, nc) in rep.terms {
                            cur.insert(nd, nc.mul(&coeff));
                        }
                        trace.steps.push(TraceStep {
                            rule: FAMILIES[mm.family].name.to_string(),
                            dir: mm.dir,
                            term: tix,
                            slices: mm.slices.clone(),
                            pos: mm.slices.first().map(|&s| d.slices[s].pos).unwrap_or(0),
                            note: String::new(),
                        });
                        steps += 1;
                        continue 'outer;
                    }
                }
            }
            return (cur, NormalStatus::Normal, trace);
        }
    }

    /// KLR-directed normalization on the upward sector: crossing-shrinking
    /// rules plus downward dot slides, reducing to combinations of reduced
    /// crossing words over dotted identities.
    pub fn normalize_upward(&self, m: &Morphism) -> (Morphism, NormalStatus, RewriteTrace) {
        let fams: Vec<usize> = ["eq_r2", "eq_r3_easy", "eq_r3_hard"]
            .iter()
            .filter_map(|n| family_id(n))
            .collect();
        self.run_fixpoint(m, &fams, true)
    }

    /// Like `normalize_upward` but applying matches in a randomized order;
    /// used by the confluence tests.
    pub fn normalize_upward_randomized(
        &self,
        m: &Morphism,
        rng: &mut StdRng,
    ) -> (Morphism, NormalStatus) {
        let fams: Vec<usize> = [
            "eq_r2",
            "eq_r3_easy",
            "eq_r3_hard",
        ]
        .iter()
        .filter_map(|n| family_id(n))
        .collect();
        let mut cur = m.clone();
        let mut steps = 0usize;
        'outer: loop {
            if steps >= self.t3_budget {
                return (cur, NormalStatus::BudgetExceeded);
            }
            let terms: Vec<Diagram> = cur.terms.keys().cloned().collect();
            let mut all: Vec<(Diagram, Match)> = Vec::new();
            for d in terms.iter() {
                let w = Wiring::build(d);
                for &fam in &fams {
                    for mm in self.find_family(d, &w, fam, Dir::Fwd) {
                        all.push((d.clone(), mm));
                    }
                }
                for name in ["eq_dot_slide_ii", "eq_dot_slide_ij"] {
                    let fam = family_id(name).unwrap();
                    for mm in self.find_family(d, &w, fam, Dir::Bwd) {
                        all.push((d.clone(), mm));
                    }
                }
            }
            while !all.is_empty() {
                let pick = rng.gen_range(0..all.len());
                let (d, mm) = all.swap_remove(pick);
                if let Ok(rep) = self.apply_match(&d, &mm) {
                    let coeff = cur.terms.get(&d).cloned().unwrap_or_else(Scalar::zero);
                    if coeff.is_zero() {
                        continue;
                    }
                    cur.terms.remove(&d);
                    for (nd, nc) in rep.terms {
                        cur.insert(nd, nc.mul(&coeff));
                    }
                    steps += 1;
                    continue 'outer;
                }
            }
            return (cur, NormalStatus::Normal);
        }
    }

    /// Bounded bidirectional search: reduce `a - b` to zero. Deterministic
    /// given (inputs, depth, beam).
    pub fn prove_equal(
        &self,
        a: &Morphism,
        b: &Morphism,
        depth: usize,
    ) -> Result<ProveResult, RewriteError> {
        if !a.is_parallel_to(b) {
            return Err(RewriteError::NotParallel(format!(
                "{} -> {} vs {} -> {}",
                seq_to_string(&a.source),
                seq_to_string(&a.target),
                seq_to_string(&b.source),
                seq_to_string(&b.target)
            )));
        }
        let start = a.sub(b)?;
        let mut frontier: Vec<(Morphism, RewriteTrace)> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let (reduced, _, rt) = self.normalize(&start, Tier::T3);
        if reduced.is_zero() {
            return Ok(ProveResult::Proved(rt));
        }
        seen.insert(state_key(&reduced));
        frontier.push((reduced, rt));
        for _ in 0..depth {
            let mut next: Vec<(Morphism, RewriteTrace)> = Vec::new();
            for (state, trace) in &frontier {
                for (mv_rule, mv_dir, nm, note) in self.moves(state) {
                    let (red, _, rt2) = self.normalize(&nm, Tier::T3);
                    let mut t = trace.clone();
                    t.steps.push(TraceStep {
                        rule: mv_rule.clone(),
                        dir: mv_dir,
                        term: 0,
                        slices: vec![],
                        pos: 0,
                        note,
                    });
                    t.steps.extend(rt2.steps);
                    if red.is_zero() {
                        return Ok(ProveResult::Proved(t));
                    }
                    let key = state_key(&red);
                    if seen.insert(key) {
                        next.push((red, t));
                    }
                }
            }
            next.sort_by_key(|(m, _)| (m.terms.len(), m.num_slices(), state_key(m)));
            next.truncate(self.beam);
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(ProveResult::Unknown)
    }

    /// All single-step moves from a state, in deterministic order.
    fn moves(&self, state: &Morphism) -> Vec<(String, Dir, Morphism, String)> {
        let mut out = Vec::new();
        let terms: Vec<(Diagram, Scalar)> =
            state.terms.iter().map(|(d, c)| (d.clone(), c.clone())).collect();
        for (tix, (d, coeff)) in terms.iter().enumerate() {
            let w = Wiring::build(d);
            let mut all_matches: Vec<Match> = Vec::new();
            for fam in 0..FAMILIES.len() {
                if FAMILIES[fam].name == "curl_eval" {
                    continue;
                }
                all_matches.extend(self.find_family(d, &w, fam, Dir::Fwd));
                all_matches.extend(self.find_family(d, &w, fam, Dir::Bwd));
            }
            all_matches.extend(self.insertions(d, &w));
            for mm in all_matches {
                if let Ok(rep) = self.apply_match(d, &mm) {
                    let mut nm = state.clone();
                    nm.terms.remove(d);
                    let mut ok = true;
                    for (nd, nc) in rep.terms {
                        if nd.num_slices() > 24 {
                            ok = false;
                            break;
                        }
                        nm.insert(nd, nc.mul(coeff));
                    }
                    if ok && nm.terms.len() <= 48 {
                        out.push((
                            FAMILIES[mm.family].name.to_string(),
                            mm.dir,
                            nm,
                            format!("term={} slices={:?}", tix, mm.slices),
                        ));
                    }
                }
            }
        }
        // Whole-state rotation: sound for zero-testing since rotation is an
        // isomorphism on hom-spaces.
        out.push((
            "rotate_state".to_string(),
            Dir::Fwd,
            state.rotate_dual(&self.theory.datum),
            String::new(),
        ));
        out
    }

    /// Apply one named rule at an explicit position: the public replay
    /// primitive.
    pub fn apply_rule(
        &self,
        m: &Morphism,
        rule: &str,
        term: usize,
        slices: &[usize],
        dir: Dir,
    ) -> Result<Morphism, RewriteError> {
        let fam =
            family_id(rule).ok_or_else(|| RewriteError::Other(format!("unknown rule {}", rule)))?;
        let d = m
            .terms
            .keys()
            .nth(term)
            .ok_or_else(|| RewriteError::NoMatch {
                rule: rule.into(),
                term,
                slices: slices.to_vec(),
            })?
            .clone();
        let w = Wiring::build(&d);
        let mut cands = self.find_family(&d, &w, fam, dir);
        cands.retain(|c| c.slices == slices);
        let mm = cands.into_iter().next().ok_or_else(|| RewriteError::NoMatch {
            rule: rule.into(),
            term,
            slices: slices.to_vec(),
        })?;
        let rep = self.apply_match(&d, &mm)?;
        let coeff = m.terms.get(&d).cloned().unwrap_or_else(Scalar::zero);
        let mut out = m.clone();
        out.terms.remove(&d);
        for (nd, nc) in rep.terms {
            out.insert(nd, nc.mul(&coeff));
        }
        Ok(out)
    }
}

fn state_key(m: &Morphism) -> String {
    let mut s = String::new();
    for (d, c) in &m.terms {
        s.push_str(&format!("{:?}#{}|", d, c.render()));
    }
    s
}

fn is_crossing(g: &Gen) -> bool {
    matches!(
        g,
        Gen::CrossUU { .. } | Gen::CrossDD { .. } | Gen::CrossFE { .. } | Gen::CrossEF { .. }
    )
}

fn is_cup(g: &Gen) -> bool {
    matches!(g, Gen::CupEF { .. } | Gen::CupFE { .. })
}

fn is_cap(g: &Gen) -> bool {
    matches!(g, Gen::CapEF { .. } | Gen::CapFE { .. })
}

fn cross_colors(g: &Gen) -> (usize, usize) {
    match *g {
        Gen::CrossUU { i, j }
        | Gen::CrossDD { i, j }
        | Gen::CrossFE { i, j }
        | Gen::CrossEF { i, j } => (i, j),
        _ => unreachable!(),
    }
}

fn other_color(g: &Gen, port: usize) -> usize {
    let (i, j) = cross_colors(g);
    if port == 0 {
        i
    } else {
        j
    }
}

fn same_updown(g: &Gen, up: bool) -> bool {
    match g {
        Gen::CrossUU { .. } => up,
        Gen::CrossDD { .. } => !up,
        _ => false,
    }
}

/// 180° rotation on the crossing alphabet.
fn rotate_crossing(g: &Gen) -> Gen {
    match *g {
        Gen::CrossUU { i, j } => Gen::CrossDD { i, j },
        Gen::CrossDD { i, j } => Gen::CrossUU { i, j },
        Gen::CrossFE { i, j } => Gen::CrossEF { i, j },
        Gen::CrossEF { i, j } => Gen::CrossFE { i, j },
        _ => unreachable!(),
    }
}

/// Recognize the 90°-rotation composites of eq_crossl / eq_crossr on a
/// contiguous [cup; crossing; cap] block and return the sideways crossing.
fn ninety_degree_shape(c: &Slice, x: &Slice, k: &Slice, crossl: bool) -> Option<Gen> {
    let (i, j) = cross_colors(&x.gen);
    match (&c.gen, &x.gen, &k.gen) {
        // crossl comp1: CupEF(i) left of the strands, CrossUU(i,j), CapFE(i)
        (Gen::CupEF { i: a }, Gen::CrossUU { .. }, Gen::CapFE { i: b })
            if crossl && a == b && *a == i && x.pos == c.pos + 1 && k.pos == c.pos + 2 =>
        {
            Some(Gen::CrossEF { i: j, j: i })
        }
        // crossl comp2: CupEF(j) right, CrossDD(i,j), CapFE(j) left
        (Gen::CupEF { i: a }, Gen::CrossDD { .. }, Gen::CapFE { i: b })
            if crossl && a == b && *a == j && x.pos + 1 == c.pos && k.pos + 1 == x.pos =>
        {
            Some(Gen::CrossEF { i: j, j: i })
        }
        // crossr comp1: CupFE(j) right, CrossUU(i,j), CapEF(j) left
        (Gen::CupFE { i: a }, Gen::CrossUU { .. }, Gen::CapEF { i: b })
            if !crossl && a == b && *a == j && x.pos + 1 == c.pos && k.pos + 1 == x.pos =>
        {
            Some(Gen::CrossFE { i: j, j: i })
        }
        // crossr comp2: CupFE(i) left, CrossDD(i,j), CapEF(i) right
        (Gen::CupFE { i: a }, Gen::CrossDD { .. }, Gen::CapEF { i: b })
            if !crossl && a == b && *a == i && x.pos == c.pos + 1 && k.pos == c.pos + 2 =>
        {
            Some(Gen::CrossFE { i: j, j: i })
        }
        _ => None,
    }
}

/// Generic crossing/cup/cap bend: slide a crossing past an adjacent cup or
/// cap, rotating one leg. Scalar-free in the cyclic calculus.
fn cross_bend_rewrite(block: &[Slice], level_seq: &Seq) -> Option<Vec<(Vec<Slice>, Scalar)>> {
    let [a, b] = block else { return None };
    if is_crossing(&a.gen) && is_cap(&b.gen) {
        let (x, k) = (a, b);
        let p = x.pos;
        let xin = x.gen.in_seq();
        if k.pos == p + 1 {
            let e = *level_seq.get(p + 2)?;
            let y = crossing_for(xin[1], e);
            let k2 = cap_for(xin[0], e)?;
            return Some(vec![(
                vec![Slice { pos: p + 1, gen: y }, Slice { pos: p, gen: k2 }],
                Scalar::one(),
            )]);
        }
        if p >= 1 && k.pos + 1 == p {
            let e = *level_seq.get(p - 1)?;
            let y = crossing_for(e, xin[0]);
            let k2 = cap_for(e, xin[1])?;
            return Some(vec![(
                vec![Slice { pos: p - 1, gen: y }, Slice { pos: p, gen: k2 }],
                Scalar::one(),
            )]);
        }
        return None;
    }
    if is_cup(&a.gen) && is_crossing(&b.gen) {
        let (c, x) = (a, b);
        let cout = c.gen.out_seq();
        if x.pos + 1 == c.pos {
            let s = *level_seq.get(x.pos)?;
            let c2 = cup_for(cout[0], s)?;
            let y = crossing_for(cout[1], s);
            return Some(vec![(
                vec![Slice { pos: x.pos, gen: c2 }, Slice { pos: x.pos + 1, gen: y }],
                Scalar::one(),
            )]);
        }
        if x.pos == c.pos {
            let s = *level_seq.get(c.pos)?;
            let c2 = cup_for(s, cout[1])?;
            let y = crossing_for(s, cout[0]);
            return Some(vec![(
                vec![Slice { pos: c.pos + 1, gen: c2 }, Slice { pos: c.pos, gen: y }],
                Scalar::one(),
            )]);
        }
        return None;
    }
    None
}

/// The crossing generator with the given source entries.
fn crossing_for(a: Entry, b: Entry) -> Gen {
    match (a.up, b.up) {
        (true, true) => Gen::CrossUU { i: a.color, j: b.color },
        (false, false) => Gen::CrossDD { i: a.color, j: b.color },
        (false, true) => Gen::CrossFE { i: a.color, j: b.color },
        (true, false) => Gen::CrossEF { i: a.color, j: b.color },
    }
}

fn cap_for(a: Entry, b: Entry) -> Option<Gen> {
    if a.color != b.color || a.up == b.up {
        return None;
    }
    Some(if a.up { Gen::CapFE { i: a.color } } else { Gen::CapEF { i: a.color } })
}

fn cup_for(a: Entry, b: Entry) -> Option<Gen> {
    if a.color != b.color || a.up == b.up {
        return None;
    }
    Some(if a.up { Gen::CupFE { i: a.color } } else { Gen::CupEF { i: a.color } })
}

// ---------------------------------------------------------------------
// instance generation (homogeneity checks, tests)
// ---------------------------------------------------------------------

/// Deterministic seed diagrams containing instances of every family, over
/// all color tuples and a window of weights.
pub fn seed_diagrams(th: &Theory, window: i64) -> Vec<Diagram> {
    let n = th.datum.rank();
    let mut out: Vec<Diagram> = Vec::new();
    let mut weights: Vec<Weight> = Vec::new();
    {
        let mut coords = vec![-window; n];
        'outer: loop {
            weights.push(Weight::new(coords.clone()));
            let mut k = 0;
            loop {
                if k == n {
                    break 'outer;
                }
                coords[k] += 1;
                if coords[k] <= window {
                    break;
                }
                coords[k] = -window;
                k += 1;
            }
        }
    }
    let mut push = |src: Seq, lam: &Weight, slices: Vec<Slice>| {
        if let Ok(d) = Diagram::new(src, lam.clone(), slices) {
            out.push(d);
        }
    };
    for lam in &weights {
        for i in 0..n {
            let e = Entry::up(i);
            let f = Entry::down(i);
            // zigzags (both biadjunctions, both strand orientations)
            push(vec![e], lam, vec![
                Slice { pos: 1, gen: Gen::CupEF { i } },
                Slice { pos: 0, gen: Gen::CapFE { i } },
            ]);
            push(vec![f], lam, vec![
                Slice { pos: 0, gen: Gen::CupEF { i } },
                Slice { pos: 1, gen: Gen::CapFE { i } },
            ]);
            push(vec![e], lam, vec![
                Slice { pos: 0, gen: Gen::CupFE { i } },
                Slice { pos: 1, gen: Gen::CapEF { i } },
            ]);
            push(vec![f], lam, vec![
                Slice { pos: 1, gen: Gen::CupFE { i } },
                Slice { pos: 0, gen: Gen::CapEF { i } },
            ]);
            // dot rotations (both chiralities, both orientations)
            push(vec![f], lam, vec![
                Slice { pos: 1, gen: Gen::CupFE { i } },
                Slice { pos: 1, gen: Gen::Dot { i, up: true } },
                Slice { pos: 0, gen: Gen::CapEF { i } },
            ]);
            push(vec![f], lam, vec![
                Slice { pos: 0, gen: Gen::CupEF { i } },
                Slice { pos: 1, gen: Gen::Dot { i, up: true } },
                Slice { pos: 1, gen: Gen::CapFE { i } },
            ]);
            push(vec![e], lam, vec![
                Slice { pos: 1, gen: Gen::CupEF { i } },
                Slice { pos: 1, gen: Gen::Dot { i, up: false } },
                Slice { pos: 0, gen: Gen::CapFE { i } },
            ]);
            push(vec![e], lam, vec![
                Slice { pos: 0, gen: Gen::CupFE { i } },
                Slice { pos: 1, gen: Gen::Dot { i, up: false } },
                Slice { pos: 1, gen: Gen::CapEF { i } },
            ]);
            // curls with a few dots
            for dots in 0..=2 {
                let mut slices = vec![Slice { pos: 1, gen: Gen::CupFE { i } }];
                for _ in 0..dots {
                    slices.push(Slice { pos: 2, gen: Gen::Dot { i, up: false } });
                }
                slices.push(Slice { pos: 0, gen: Gen::CrossUU { i, j: i } });
                slices.push(Slice { pos: 1, gen: Gen::CapFE { i } });
                push(vec![e], lam, slices);
                let mut slices = vec![Slice { pos: 0, gen: Gen::CupEF { i } }];
                for _ in 0..dots {
                    slices.push(Slice { pos: 0, gen: Gen::Dot { i, up: false } });
                }
                slices.push(Slice { pos: 1, gen: Gen::CrossUU { i, j: i } });
                slices.push(Slice { pos: 0, gen: Gen::CapEF { i } });
                push(vec![e], lam, slices);
            }
            // bubbles across the spadesuit range, and dotted circles
            for cw in [false, true] {
                let h = th.pairing(i, lam);
                let spade = if cw { h - 1 } else { -h - 1 };
                for delta in -2..=4 {
                    push(vec![], lam, vec![Slice {
                        pos: 0,
                        gen: Gen::Bubble { i, cw, dots: spade + delta },
                    }]);
                }
                let (cup, cap) = if cw {
                    (Gen::CupFE { i }, Gen::CapFE { i })
                } else {
                    (Gen::CupEF { i }, Gen::CapEF { i })
                };
                push(vec![], lam, vec![
                    Slice { pos: 0, gen: cup },
                    Slice { pos: 0, gen: Gen::Dot { i, up: cw } },
                    Slice { pos: 0, gen: cap },
                ]);
            }
            for j in 0..n {
                let ej = Entry::up(j);
                let fj = Entry::down(j);
                // double crossings, both orientations
                push(vec![e, ej], lam, vec![
                    Slice { pos: 0, gen: Gen::CrossUU { i, j } },
                    Slice { pos: 0, gen: Gen::CrossUU { i: j, j: i } },
                ]);
                push(vec![f, fj], lam, vec![
                    Slice { pos: 0, gen: Gen::CrossDD { i, j } },
                    Slice { pos: 0, gen: Gen::CrossDD { i: j, j: i } },
                ]);
                // dot slides
                for port in 0..2usize {
                    let col = if port == 0 { i } else { j };
                    push(vec![e, ej], lam, vec![
                        Slice { pos: port, gen: Gen::Dot { i: col, up: true } },
                        Slice { pos: 0, gen: Gen::CrossUU { i, j } },
                    ]);
                    push(vec![f, fj], lam, vec![
                        Slice { pos: port, gen: Gen::Dot { i: col, up: false } },
                        Slice { pos: 0, gen: Gen::CrossDD { i, j } },
                    ]);
                }
                // mixed / extended sl2 double sideways crossings
                push(vec![e, fj], lam, vec![
                    Slice { pos: 0, gen: Gen::CrossEF { i, j } },
                    Slice { pos: 0, gen: Gen::CrossFE { i: j, j: i } },
                ]);
                push(vec![f, ej], lam, vec![
                    Slice { pos: 0, gen: Gen::CrossFE { i, j } },
                    Slice { pos: 0, gen: Gen::CrossEF { i: j, j: i } },
                ]);
                // 90° rotation composites (all four shapes)
                push(vec![ej, f], lam, vec![
                    Slice { pos: 0, gen: Gen::CupEF { i } },
                    Slice { pos: 1, gen: Gen::CrossUU { i, j } },
                    Slice { pos: 2, gen: Gen::CapFE { i } },
                ]);
                push(vec![ej, f], lam, vec![
                    Slice { pos: 2, gen: Gen::CupEF { i: j } },
                    Slice { pos: 1, gen: Gen::CrossDD { i, j } },
                    Slice { pos: 0, gen: Gen::CapFE { i: j } },
                ]);
                push(vec![fj, e], lam, vec![
                    Slice { pos: 2, gen: Gen::CupFE { i: j } },
                    Slice { pos: 1, gen: Gen::CrossUU { i, j } },
                    Slice { pos: 0, gen: Gen::CapEF { i: j } },
                ]);
                push(vec![fj, e], lam, vec![
                    Slice { pos: 0, gen: Gen::CupFE { i } },
                    Slice { pos: 1, gen: Gen::CrossDD { i, j } },
                    Slice { pos: 2, gen: Gen::CapEF { i } },
                ]);
                // 180° rotation composites, both chiralities
                for x in [Gen::CrossUU { i, j }, Gen::CrossDD { i, j }] {
                    let xin = x.in_seq();
                    let xout = x.out_seq();
                    let src = crate::diagram::dual_seq(&xout);
                    let cup_for_entry = |e: Entry| {
                        if e.up { Gen::CupFE { i: e.color } } else { Gen::CupEF { i: e.color } }
                    };
                    let cap_for_entry = |e: Entry| {
                        if e.up { Gen::CapEF { i: e.color } } else { Gen::CapFE { i: e.color } }
                    };
                    push(src, lam, vec![
                        Slice { pos: 2, gen: cup_for_entry(xin[0]) },
                        Slice { pos: 3, gen: cup_for_entry(xin[1]) },
                        Slice { pos: 2, gen: x },
                        Slice { pos: 1, gen: cap_for_entry(xout[0]) },
                        Slice { pos: 0, gen: cap_for_entry(xout[1]) },
                    ]);
                }
                // triple crossings
                for k in 0..n {
                    let ek = Entry::up(k);
                    push(vec![e, ej, ek], lam, vec![
                        Slice { pos: 0, gen: Gen::CrossUU { i, j } },
                        Slice { pos: 1, gen: Gen::CrossUU { i, j: k } },
                        Slice { pos: 0, gen: Gen::CrossUU { i: j, j: k } },
                    ]);
                    push(
                        vec![Entry::down(i), Entry::down(j), Entry::down(k)],
                        lam,
                        vec![
                            Slice { pos: 0, gen: Gen::CrossDD { i, j } },
                            Slice { pos: 1, gen: Gen::CrossDD { i, j: k } },
                            Slice { pos: 0, gen: Gen::CrossDD { i: j, j: k } },
                        ],
                    );
                }
            }
        }
    }
    out
}

/// Random valid diagram over the theory, for property tests.
pub fn random_diagram(
    th: &Theory,
    rng: &mut StdRng,
    max_strands: usize,
    max_slices: usize,
) -> Diagram {
    let n = th.datum.rank();
    let width = rng.gen_range(0..=max_strands);
    let src: Seq = (0..width)
        .map(|_| Entry {
            color: rng.gen_range(0..n),
            up: rng.gen_bool(0.7),
        })
        .collect();
    let lam = Weight::new((0..n).map(|_| rng.gen_range(-2..=2)).collect());
    let mut slices: Vec<Slice> = Vec::new();
    let mut cur = src.clone();
    let target = rng.gen_range(0..=max_slices);
    let mut guard = 0;
    while slices.len() < target && guard < 200 {
        guard += 1;
        let mut options: Vec<Slice> = Vec::new();
        for p in 0..cur.len() {
            let e = cur[p];
            options.push(Slice { pos: p, gen: Gen::Dot { i: e.color, up: e.up } });
            if p + 1 < cur.len() {
                let g = cur[p + 1];
                options.push(Slice { pos: p, gen: crossing_for(e, g) });
                if let Some(k) = cap_for(e, g) {
                    options.push(Slice { pos: p, gen: k });
                }
            }
        }
        for gpos in 0..=cur.len() {
            let i = rng.gen_range(0..n);
            options.push(Slice {
                pos: gpos,
                gen: if rng.gen_bool(0.5) { Gen::CupEF { i } } else { Gen::CupFE { i } },
            });
        }
        if options.is_empty() {
            break;
        }
        let s = options[rng.gen_range(0..options.len())];
        let a = s.gen.in_arity();
        cur.splice(s.pos..s.pos + a, s.gen.out_seq());
        slices.push(s);
    }
    Diagram::new(src, lam, slices).expect("generated diagrams are valid")
}

/// Random upward diagram (dots and upward crossings only).
pub fn random_upward_diagram(
    th: &Theory,
    rng: &mut StdRng,
    strands: usize,
    max_dots: usize,
    max_cross: usize,
) -> Diagram {
    let n = th.datum.rank();
    let src: Seq = (0..strands).map(|_| Entry::up(rng.gen_range(0..n))).collect();
    let lam = Weight::new((0..n).map(|_| rng.gen_range(-2..=2)).collect());
    let mut slices = Vec::new();
    let mut cur = src.clone();
    let mut dots = 0;
    let mut crossings = 0;
    for _ in 0..(max_dots + max_cross) * 2 {
        if rng.gen_bool(0.5) && dots < max_dots && !cur.is_empty() {
            let p = rng.gen_range(0..cur.len());
            slices.push(Slice { pos: p, gen: Gen::Dot { i: cur[p].color, up: true } });
            dots += 1;
        } else if crossings < max_cross && cur.len() >= 2 {
            let p = rng.gen_range(0..cur.len() - 1);
            let g = Gen::CrossUU { i: cur[p].color, j: cur[p + 1].color };
            cur.splice(p..p + 2, g.out_seq());
            slices.push(Slice { pos: p, gen: g });
            crossings += 1;
        }
    }
    Diagram::new(src, lam, slices).expect("generated upward diagrams are valid")
}

pub fn install_ruleset(theory: Theory) -> Result<RuleSet, RewriteError> {
    RuleSet::install(theory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::CartanDatum;

    fn rs_sl2() -> RuleSet {
        RuleSet::install(Theory::generic(CartanDatum::sl2())).unwrap()
    }

    fn wt(h: i64) -> Weight {
        Weight::new(vec![h])
    }

    #[test]
    fn install_standard_theories() {
        for datum in [
            CartanDatum::sl2(),
            CartanDatum::a2(),
            CartanDatum::b2(),
            CartanDatum::affine_a1(),
        ] {
            RuleSet::install(Theory::generic(datum)).unwrap();
        }
    }

    #[test]
    fn every_family_exercised_on_rank_two() {
        // On a rank-2 datum with an off-diagonal edge every family must have
        // instances in the seed corpus.
        let rs = RuleSet::install(Theory::generic(CartanDatum::a2())).unwrap();
        let report = rs.homogeneity_report(2).unwrap();
        for (name, ok, detail) in report {
            assert!(ok, "family {} not exercised or inhomogeneous: {}", name, detail);
        }
    }

    #[test]
    fn displayed_family_count_is_17() {
        assert_eq!(rs_sl2().displayed_family_count(), 17);
    }

    #[test]
    fn zigzag_reduces_to_identity() {
        let rs = rs_sl2();
        let zig = Diagram::new(
            vec![Entry::up(0)],
            wt(1),
            vec![
                Slice { pos: 1, gen: Gen::CupEF { i: 0 } },
                Slice { pos: 0, gen: Gen::CapFE { i: 0 } },
            ],
        )
        .unwrap();
        let (n, status, trace) = rs.normalize(&Morphism::from_diagram(zig), Tier::T3);
        assert_eq!(status, NormalStatus::Normal);
        assert!(!trace.steps.is_empty());
        let id = Morphism::identity(vec![Entry::up(0)], wt(1));
        assert_eq!(n, id);
    }

    #[test]
    fn double_crossing_vanishes_sl2() {
        let rs = rs_sl2();
        let d = Diagram::new(
            vec![Entry::up(0), Entry::up(0)],
            wt(0),
            vec![
                Slice { pos: 0, gen: Gen::CrossUU { i: 0, j: 0 } },
                Slice { pos: 0, gen: Gen::CrossUU { i: 0, j: 0 } },
            ],
        )
        .unwrap();
        let (n, _, _) = rs.normalize(&Morphism::from_diagram(d), Tier::T3);
        assert!(n.is_zero());
    }

    #[test]
    fn r2_orthogonal_colors() {
        let datum = CartanDatum::new(vec![1, 2], vec![vec![2, 0], vec![0, 2]], vec![1, 1]);
        let rs = RuleSet::install(Theory::generic(datum)).unwrap();
        let lam = rs.theory.datum.zero_weight();
        let d = Diagram::new(
            vec![Entry::up(0), Entry::up(1)],
            lam.clone(),
            vec![
                Slice { pos: 0, gen: Gen::CrossUU { i: 0, j: 1 } },
                Slice { pos: 0, gen: Gen::CrossUU { i: 1, j: 0 } },
            ],
        )
        .unwrap();
        let (n, _, _) = rs.normalize(&Morphism::from_diagram(d), Tier::T3);
        let expected =
            Morphism::identity(vec![Entry::up(0), Entry::up(1)], lam).scale(rs.theory.q.t(0, 1));
        assert_eq!(n, expected);
    }

    #[test]
    fn prove_zigzag_equals_identity() {
        let rs = rs_sl2();
        let zig = Morphism::from_diagram(
            Diagram::new(
                vec![Entry::up(0)],
                wt(0),
                vec![
                    Slice { pos: 1, gen: Gen::CupEF { i: 0 } },
                    Slice { pos: 0, gen: Gen::CapFE { i: 0 } },
                ],
            )
            .unwrap(),
        );
        let id = Morphism::identity(vec![Entry::up(0)], wt(0));
        match rs.prove_equal(&zig, &id, 1).unwrap() {
            ProveResult::Proved(trace) => assert!(!trace.steps.is_empty()),
            ProveResult::Unknown => panic!("zigzag not proved"),
        }
    }

    #[test]
    fn depth_zero_nontrivial_is_unknown() {
        let rs = rs_sl2();
        let dot = Morphism::from_diagram(
            Diagram::new(
                vec![Entry::up(0)],
                wt(0),
                vec![Slice { pos: 0, gen: Gen::Dot { i: 0, up: true } }],
            )
            .unwrap(),
        );
        let two = dot.scale(&Scalar::int(2));
        match rs.prove_equal(&dot, &two, 0).unwrap() {
            ProveResult::Unknown => {}
            ProveResult::Proved(_) => panic!("false statement proved"),
        }
    }

    #[test]
    fn rotation_composite_reduces_to_dd() {
        let rs = RuleSet::install(Theory::generic(CartanDatum::a2())).unwrap();
        let lam = rs.theory.datum.zero_weight();
        let x = Gen::CrossUU { i: 0, j: 1 };
        let src = crate::diagram::dual_seq(&x.out_seq());
        let d = Diagram::new(
            src.clone(),
            lam.clone(),
            vec![
                Slice { pos: 2, gen: Gen::CupFE { i: 0 } },
                Slice { pos: 3, gen: Gen::CupFE { i: 1 } },
                Slice { pos: 2, gen: x },
                Slice { pos: 1, gen: Gen::CapEF { i: 1 } },
                Slice { pos: 0, gen: Gen::CapEF { i: 0 } },
            ],
        )
        .unwrap();
        let (n, _, _) = rs.normalize(&Morphism::from_diagram(d), Tier::T3);
        let dd = Morphism::from_diagram(
            Diagram::new(src, lam, vec![Slice { pos: 0, gen: Gen::CrossDD { i: 0, j: 1 } }])
                .unwrap(),
        );
        assert_eq!(n, dd);
    }

    #[test]
    fn rotate_dual_squared_normalizes_to_generator() {
        let rs = rs_sl2();
        let dot = Diagram::new(
            vec![Entry::up(0)],
            wt(1),
            vec![Slice { pos: 0, gen: Gen::Dot { i: 0, up: true } }],
        )
        .unwrap();
        let m = Morphism::from_diagram(dot);
        let rr = m.rotate_dual(&rs.theory.datum).rotate_dual(&rs.theory.datum);
        let (n, _, _) = rs.normalize(&rr, Tier::T3);
        assert_eq!(n, m);
    }

    #[test]
    fn curl_normalizes_in_extended_tier() {
        let rs = rs_sl2();
        let curl = Diagram::new(
            vec![Entry::up(0)],
            wt(0),
            vec![
                Slice { pos: 1, gen: Gen::CupFE { i: 0 } },
                Slice { pos: 0, gen: Gen::CrossUU { i: 0, j: 0 } },
                Slice { pos: 1, gen: Gen::CapFE { i: 0 } },
            ],
        )
        .unwrap();
        let (n, status, _) = rs.normalize(&Morphism::from_diagram(curl), Tier::T3Extended);
        assert_eq!(status, NormalStatus::Normal);
        let c = rs.theory.c_value(0, &wt(0)).unwrap();
        let expected = Morphism::identity(vec![Entry::up(0)], wt(0)).scale(&c.neg());
        assert_eq!(n, expected);
    }

    #[test]
    fn curl_proof_via_search() {
        let rs = rs_sl2();
        let curl = Morphism::from_diagram(
            Diagram::new(
                vec![Entry::up(0)],
                wt(0),
                vec![
                    Slice { pos: 1, gen: Gen::CupFE { i: 0 } },
                    Slice { pos: 0, gen: Gen::CrossUU { i: 0, j: 0 } },
                    Slice { pos: 1, gen: Gen::CapFE { i: 0 } },
                ],
            )
            .unwrap(),
        );
        let value =
            crate::bubbles::curl_reduce(&rs.theory, crate::bubbles::CurlSide::Left, 0, &wt(0), 0)
                .unwrap();
        match rs.prove_equal(&curl, &value, 12).unwrap() {
            ProveResult::Proved(_) => {}
            ProveResult::Unknown => panic!("curl not proved"),
        }
    }
}
