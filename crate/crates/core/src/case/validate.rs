use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BusType, NetworkCase, VscMode};

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// One broken invariant: which record, which rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub record: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.record, self.rule)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn check(&mut self, ok: bool, record: impl Into<String>, rule: &str) {
        if !ok {
            self.0.push(Violation {
                record: record.into(),
                rule: rule.to_string(),
            });
        }
    }
}

pub(super) fn validate(case: &NetworkCase) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    r.check(case.system_base_mva > 0.0, "case", "system_base_mva > 0");
    r.check(case.f_base_hz > 0.0, "case", "f_base_hz > 0");

    let mut ids = BTreeSet::new();
    for b in &case.buses {
        let rec = format!("bus {}", b.id);
        r.check(ids.insert(b.id), &rec, "bus ids are unique");
        r.check(b.base_kv > 0.0, &rec, "base_kv > 0");
        if b.kind != BusType::Pq {
            r.check(
                b.v_set > 0.5 && b.v_set < 1.5,
                &rec,
                "v_set in (0.5, 1.5) for slack/PV buses",
            );
        }
    }
    let has_bus = |id: usize| case.buses.iter().any(|b| b.id == id);

    for (i, br) in case.branches.iter().enumerate() {
        let rec = format!("branch {i} ({}-{})", br.from, br.to);
        r.check(br.x != 0.0, &rec, "x != 0");
        r.check(br.r >= 0.0, &rec, "r >= 0");
        r.check(br.from != br.to, &rec, "from != to");
        r.check(has_bus(br.from) && has_bus(br.to), &rec, "bus references resolve");
    }

    for (i, m) in case.machines.iter().enumerate() {
        let rec = format!("machine {i} (bus {})", m.bus);
        r.check(m.h > 0.0, &rec, "H > 0");
        r.check(m.xd_prime > 0.0, &rec, "xd_prime > 0");
        r.check(m.d >= 0.0, &rec, "D >= 0");
        r.check(m.rating_mva > 0.0, &rec, "rating_mva > 0");
        r.check(has_bus(m.bus), &rec, "bus reference resolves");
        if let Some(g) = &m.governor {
            r.check(g.r > 0.0 && g.t_g > 0.0, &rec, "governor R > 0 and T_g > 0");
        }
    }

    let has_dc_bus = |id: usize| case.dc_buses.iter().any(|b| b.id == id);
    for v in &case.vscs {
        let rec = format!("VSC {}", v.id);
        r.check(v.rating_mva > 0.0, &rec, "rating_mva > 0");
        r.check(v.i_max > 0.0, &rec, "i_max > 0");
        r.check(v.tau_i > 0.0, &rec, "tau_i > 0");
        r.check(
            [v.loss_a, v.loss_b, v.loss_c_rec, v.loss_c_inv]
                .iter()
                .all(|c| *c >= 0.0),
            &rec,
            "loss coefficients >= 0",
        );
        if v.mode == VscMode::Droop {
            r.check(v.k_dc > 0.0, &rec, "k_dc > 0 in droop mode");
        }
        r.check(has_bus(v.ac_bus), &rec, "AC bus reference resolves");
        r.check(has_dc_bus(v.dc_bus), &rec, "DC bus reference resolves");
    }
    if !case.vscs.is_empty() {
        let slacks = case
            .vscs
            .iter()
            .filter(|v| v.mode == VscMode::DcSlack)
            .count();
        r.check(slacks == 1, "DC grid", "exactly one DC-slack converter");
    }

    let caps = case.dc_bus_capacitance();
    for (b, c) in case.dc_buses.iter().zip(caps) {
        let rec = format!("DC bus {}", b.id);
        r.check(c > 0.0, &rec, "c_dc > 0");
        r.check(b.v_base_kv > 0.0, &rec, "v_base_kv > 0");
    }
    for (i, l) in case.dc_lines.iter().enumerate() {
        let rec = format!("DC line {i} ({}-{})", l.from, l.to);
        r.check(l.r_dc > 0.0, &rec, "r_dc > 0");
        r.check(l.l_dc >= 0.0, &rec, "l_dc >= 0");
        r.check(l.from != l.to, &rec, "from != to");
        let resolved = has_dc_bus(l.from) && has_dc_bus(l.to);
        r.check(resolved, &rec, "DC bus references resolve");
        if resolved {
            let vb = |id| case.dc_buses.iter().find(|b| b.id == id).unwrap().v_base_kv;
            r.check(vb(l.from) == vb(l.to), &rec, "both ends share v_base_kv");
        }
    }

    check_islands(case, &mut r);
    check_dc_connected(case, &mut r);
    check_waf(case, &mut r);
    r.0
}

fn components(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

fn check_islands(case: &NetworkCase, r: &mut Report) {
    let idx: BTreeMap<usize, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let edges = case
        .branches
        .iter()
        .filter(|b| b.status)
        .filter_map(|b| Some((*idx.get(&b.from)?, *idx.get(&b.to)?)));
    let comp = components(case.buses.len(), edges);
    let mut slack_count: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, b) in case.buses.iter().enumerate() {
        let e = slack_count.entry(comp[i]).or_default();
        if b.kind == BusType::Slack {
            *e += 1;
        }
    }
    for (root, count) in slack_count {
        r.check(
            count == 1,
            format!("AC island containing bus {}", case.buses[root].id),
            "exactly one slack bus per island",
        );
    }
}

fn check_dc_connected(case: &NetworkCase, r: &mut Report) {
    if case.dc_buses.is_empty() {
        return;
    }
    let idx: BTreeMap<usize, usize> = case
        .dc_buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let edges = case
        .dc_lines
        .iter()
        .filter_map(|l| Some((*idx.get(&l.from)?, *idx.get(&l.to)?)));
    let comp = components(case.dc_buses.len(), edges);
    r.check(
        comp.iter().all(|c| *c == comp[0]),
        "DC grid",
        "DC graph is connected",
    );
}

fn check_waf(case: &NetworkCase, r: &mut Report) {
    let w = &case.waf;
    if case.vscs.is_empty() {
        return;
    }
    r.check(
        w.alpha.len() == case.vscs.len(),
        "waf",
        "one weighting factor per converter",
    );
    r.check(
        w.alpha.iter().all(|a| (0.0..=1.0).contains(a)),
        "waf",
        "weighting factors in [0, 1]",
    );
    let sum: f64 = w.alpha.iter().sum();
    r.check(
        (sum - 1.0).abs() <= WEIGHT_SUM_TOL,
        "waf",
        "sum of weighting factors must equal 1",
    );
    r.check(w.tf > 0.0 && w.tw > 0.0, "waf", "Tf > 0 and Tw > 0");
    r.check(w.t_meas > 0.0, "waf", "t_meas > 0");
    r.check(w.dp_max > 0.0 && w.dq_max > 0.0, "waf", "dp_max > 0 and dq_max > 0");
    r.check(w.kp_total >= 0.0 && w.kq_total >= 0.0, "waf", "total gains >= 0");
    r.check(w.delay_ms >= 0.0, "waf", "delay_ms >= 0");
}
