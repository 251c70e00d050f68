//! Synchronous message-passing simulation of the distributed box computation.
//!
//! Every hole runs pointer jumping along its perimeter cycle: in each wave a
//! node hands its current forward link and running extremes to its backward
//! link, so link distances double and the aggregated window covers the whole
//! cycle after `ceil(log2 h)` waves. The node with the smallest x then leads
//! its hole; leaders meet through an introduction oracle that stands in for
//! an overlay-tree protocol and charges `ceil(log2 n)` rounds per wave.

use crate::abstraction::HoleAbstraction;
use crate::geom::{Point, Rect};
use crate::netgen::NetworkInstance;
use crate::topology::HoleSet;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Additive slack in the aggregation round bound `2 ceil(log2 h) + slack`.
pub const AGGREGATION_SLACK: u32 = 4;
/// Largest payload, in words (coordinates or IDs), a message may carry.
pub const MAX_MESSAGE_WORDS: usize = 8;
/// Storage ceiling for nodes that hold no box list, and the additive slack
/// above `4 |H|` for those that do.
pub const STORAGE_SLACK: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlayError {
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("hole {hole}: {reason}")]
    MalformedCycle { hole: usize, reason: &'static str },
    #[error("node {from} addressed {to}, an ID it does not know")]
    UnknownRecipient { from: usize, to: usize },
    #[error("message of {0} words exceeds the size limit")]
    Oversized(usize),
    #[error("hole {0}: several nodes share the smallest x")]
    LeaderTie(usize),
    #[error("aggregation must run before dissemination")]
    NotAggregated,
    #[error("{got} abstractions for {want} holes")]
    AbstractionMismatch { got: usize, want: usize },
}

/// Running min/max of x and y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn of(p: Point) -> Self {
        Self {
            min_x: p.x,
            max_x: p.x,
            min_y: p.y,
            max_y: p.y,
        }
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            min_x: self.min_x.min(o.min_x),
            max_x: self.max_x.max(o.max_x),
            min_y: self.min_y.min(o.min_y),
            max_y: self.max_y.max(o.max_y),
        }
    }

    /// Same rectangle the centralized computation builds from these extremes.
    pub fn to_rect(self) -> Rect {
        Rect::bounding([
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.max_y),
        ])
        .expect("two points")
    }

    fn key(&self) -> [u64; 4] {
        [self.min_x, self.max_x, self.min_y, self.max_y].map(f64::to_bits)
    }

    /// Lexicographic by min x, max x, min y, max y.
    fn canonical(a: &Self, b: &Self) -> std::cmp::Ordering {
        let v = |e: &Self| [e.min_x, e.max_x, e.min_y, e.max_y];
        v(a).iter()
            .zip(v(b))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Pointer-jumping step toward the backward link: the sender's forward
    /// link and the extremes of its window.
    Jump {
        hole: usize,
        forward: usize,
        extent: Extent,
    },
    /// Pointer-jumping step toward the forward link.
    Back { hole: usize, backward: usize },
    /// One bounding box.
    Box { extent: Extent },
}

impl Payload {
    pub fn words(&self) -> usize {
        match self {
            Payload::Jump { .. } => 6,
            Payload::Back { .. } => 2,
            Payload::Box { .. } => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    forward: usize,
    backward: usize,
    extent: Extent,
}

impl Slot {
    const WORDS: usize = 7;
}

#[derive(Clone, Debug, Default)]
struct NodeState {
    /// IDs this node may address; starts as its radio neighbours.
    known: BTreeSet<usize>,
    /// Per-hole pointer-jumping state, dropped once aggregation ends.
    slots: BTreeMap<usize, Slot>,
    /// Own holes and their boxes.
    boxes: BTreeMap<usize, Extent>,
    /// Full box list, held by leaders, extreme nodes and representatives.
    list: Vec<Extent>,
    peak_words: usize,
}

impl NodeState {
    fn words(&self) -> usize {
        Slot::WORDS * self.slots.len() + 5 * self.boxes.len() + 4 * self.list.len()
    }

    fn touch(&mut self) {
        self.peak_words = self.peak_words.max(self.words());
    }
}

/// Synchronous round simulator. Messages sent in round `i` become readable
/// in round `i + 1`, and a node may only address IDs it knows.
#[derive(Clone, Debug)]
pub struct RoundSim {
    positions: Vec<Point>,
    nodes: Vec<NodeState>,
    outbox: Vec<Message>,
    inbox: Vec<Vec<Message>>,
    round: u32,
    sent_this_round: Vec<u32>,
    max_sent_per_round: u32,
    messages: u64,
    cycles: Option<Vec<Vec<usize>>>,
}

impl RoundSim {
    /// Nodes initially know their neighbours in `adjacency`.
    pub fn new(positions: Vec<Point>, adjacency: &[Vec<usize>]) -> Result<Self, OverlayError> {
        let n = positions.len();
        if adjacency.len() != n {
            return Err(OverlayError::UnknownNode(adjacency.len().min(n)));
        }
        let mut nodes = vec![NodeState::default(); n];
        for (u, nb) in adjacency.iter().enumerate() {
            if let Some(&v) = nb.iter().find(|&&v| v >= n) {
                return Err(OverlayError::UnknownNode(v));
            }
            nodes[u].known = nb.iter().copied().collect();
        }
        Ok(Self {
            positions,
            nodes,
            outbox: Vec::new(),
            inbox: vec![Vec::new(); n],
            round: 0,
            sent_this_round: vec![0; n],
            max_sent_per_round: 0,
            messages: 0,
            cycles: None,
        })
    }

    pub fn for_network(net: &NetworkInstance) -> Self {
        Self::new(net.nodes.clone(), &net.adjacency).expect("adjacency is consistent")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn messages_sent(&self) -> u64 {
        self.messages
    }

    /// Most messages any node sent within a single round so far.
    pub fn max_messages_per_node_round(&self) -> u32 {
        self.max_sent_per_round
    }

    pub fn knows(&self, a: usize, b: usize) -> bool {
        a == b || self.nodes[a].known.contains(&b)
    }

    fn check(&self, u: usize) -> Result<(), OverlayError> {
        (u < self.nodes.len())
            .then_some(())
            .ok_or(OverlayError::UnknownNode(u))
    }

    pub fn send(&mut self, from: usize, to: usize, payload: Payload) -> Result<(), OverlayError> {
        self.check(from)?;
        self.check(to)?;
        if !self.knows(from, to) {
            return Err(OverlayError::UnknownRecipient { from, to });
        }
        if payload.words() > MAX_MESSAGE_WORDS {
            return Err(OverlayError::Oversized(payload.words()));
        }
        self.sent_this_round[from] += 1;
        self.max_sent_per_round = self.max_sent_per_round.max(self.sent_this_round[from]);
        self.messages += 1;
        self.outbox.push(Message { from, to, payload });
        Ok(())
    }

    /// Messages readable by `node` in the current round.
    pub fn inbox(&self, node: usize) -> &[Message] {
        &self.inbox[node]
    }

    /// Ends the round: this round's sends become next round's inboxes.
    pub fn advance(&mut self) {
        for q in &mut self.inbox {
            q.clear();
        }
        for m in self.outbox.drain(..) {
            self.inbox[m.to].push(m);
        }
        self.sent_this_round.fill(0);
        self.round += 1;
    }

    /// Introduction oracle: makes each pair mutually known and charges
    /// `ceil(log2 n)` rounds for the wave.
    pub fn introduce(&mut self, pairs: &[(usize, usize)]) -> Result<u32, OverlayError> {
        for &(a, b) in pairs {
            self.check(a)?;
            self.check(b)?;
            self.nodes[a].known.insert(b);
            self.nodes[b].known.insert(a);
        }
        let cost = ceil_log2(self.nodes.len());
        for _ in 0..cost {
            self.advance();
        }
        Ok(cost)
    }

    /// Current storage of `node`, in words.
    pub fn storage_words(&self, node: usize) -> usize {
        self.nodes[node].words()
    }

    /// Largest storage `node` held at any point.
    pub fn peak_storage_words(&self, node: usize) -> usize {
        self.nodes[node].peak_words.max(self.nodes[node].words())
    }

    /// Box `node` holds for `hole`, if it is on that hole.
    pub fn node_box(&self, node: usize, hole: usize) -> Option<Rect> {
        self.nodes[node].boxes.get(&hole).map(|e| e.to_rect())
    }

    /// Full box list held by `node`, in canonical order.
    pub fn stored_boxes(&self, node: usize) -> Vec<Rect> {
        self.nodes[node].list.iter().map(|e| e.to_rect()).collect()
    }

    pub fn holds_box_list(&self, node: usize) -> bool {
        !self.nodes[node].list.is_empty()
    }
}

pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregationStats {
    /// Rounds from the first send to the last read.
    pub rounds: u32,
    /// Pointer-jumping waves per hole.
    pub waves: Vec<u32>,
    pub max_messages_per_node_round: u32,
    pub messages: u64,
}

#[derive(Clone, Debug)]
pub struct Aggregation {
    /// Box per hole, in input order.
    pub boxes: Vec<Rect>,
    pub stats: AggregationStats,
}

fn validate(cycles: &[Vec<usize>], n: usize) -> Result<(), OverlayError> {
    for (hole, c) in cycles.iter().enumerate() {
        let bad = |reason| Err(OverlayError::MalformedCycle { hole, reason });
        if c.len() < 3 {
            return bad("fewer than three nodes");
        }
        if c.iter().any(|&u| u >= n) {
            return bad("node out of range");
        }
        if c.iter().collect::<BTreeSet<_>>().len() != c.len() {
            return bad("repeated node");
        }
    }
    Ok(())
}

/// Pointer-jumping min/max aggregation over every hole cycle at once. Each
/// cycle node is assumed to know its two cycle neighbours.
pub fn run_hole_aggregation(
    sim: &mut RoundSim,
    cycles: &[Vec<usize>],
) -> Result<Aggregation, OverlayError> {
    validate(cycles, sim.node_count())?;
    let start = sim.round;
    for (hole, c) in cycles.iter().enumerate() {
        let h = c.len();
        for (i, &u) in c.iter().enumerate() {
            let (pred, succ) = (c[(i + h - 1) % h], c[(i + 1) % h]);
            let st = &mut sim.nodes[u];
            st.known.extend([pred, succ]);
            st.slots.insert(
                hole,
                Slot {
                    forward: succ,
                    backward: pred,
                    extent: Extent::of(sim.positions[u]),
                },
            );
            st.touch();
        }
    }
    let waves: Vec<u32> = cycles.iter().map(|c| ceil_log2(c.len())).collect();
    let max_waves = waves.iter().copied().max().unwrap_or(0);
    let sent_before = sim.messages;
    let mut max_sent = 0;
    for wave in 0..max_waves {
        for (hole, c) in cycles.iter().enumerate() {
            if wave >= waves[hole] {
                continue;
            }
            for &u in c {
                let s = sim.nodes[u].slots[&hole];
                sim.send(
                    u,
                    s.backward,
                    Payload::Jump {
                        hole,
                        forward: s.forward,
                        extent: s.extent,
                    },
                )?;
                sim.send(
                    u,
                    s.forward,
                    Payload::Back {
                        hole,
                        backward: s.backward,
                    },
                )?;
            }
        }
        max_sent = max_sent.max(sim.sent_this_round.iter().copied().max().unwrap_or(0));
        sim.advance();
        for u in 0..sim.node_count() {
            let inbox = std::mem::take(&mut sim.inbox[u]);
            let st = &mut sim.nodes[u];
            for m in &inbox {
                match m.payload {
                    Payload::Jump {
                        hole,
                        forward,
                        extent,
                    } => {
                        let slot = st.slots.get_mut(&hole).expect("slot of own hole");
                        debug_assert_eq!(slot.forward, m.from);
                        slot.forward = forward;
                        slot.extent = slot.extent.merge(extent);
                        st.known.insert(forward);
                    }
                    Payload::Back { hole, backward } => {
                        let slot = st.slots.get_mut(&hole).expect("slot of own hole");
                        debug_assert_eq!(slot.backward, m.from);
                        slot.backward = backward;
                        st.known.insert(backward);
                    }
                    Payload::Box { .. } => {}
                }
            }
            st.touch();
            sim.inbox[u] = inbox;
        }
    }
    // The final read round is part of the protocol.
    let rounds = sim.round - start + 1;
    for st in &mut sim.nodes {
        let slots = std::mem::take(&mut st.slots);
        for (hole, s) in slots {
            st.boxes.insert(hole, s.extent);
        }
        st.touch();
    }
    let boxes = cycles
        .iter()
        .enumerate()
        .map(|(hole, c)| sim.nodes[c[0]].boxes[&hole].to_rect())
        .collect();
    sim.cycles = Some(cycles.to_vec());
    Ok(Aggregation {
        boxes,
        stats: AggregationStats {
            rounds,
            waves,
            max_messages_per_node_round: max_sent,
            messages: sim.messages - sent_before,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisseminationStats {
    /// Leader node per hole.
    pub leaders: Vec<usize>,
    pub introduction_waves: u32,
    pub charged_rounds: u32,
    /// Box messages exchanged between leaders of different holes.
    pub inter_leader_messages: u64,
    /// Nodes that end up holding the full list.
    pub list_holders: Vec<usize>,
    pub rounds: u32,
}

/// Elects the smallest-x node of each hole as leader, exchanges boxes among
/// leaders and hands the full list to each hole's extreme nodes and corner
/// representatives.
pub fn elect_leader_and_disseminate(
    sim: &mut RoundSim,
    abstractions: &[HoleAbstraction],
) -> Result<DisseminationStats, OverlayError> {
    let cycles = sim.cycles.clone().ok_or(OverlayError::NotAggregated)?;
    if abstractions.len() != cycles.len() {
        return Err(OverlayError::AbstractionMismatch {
            got: abstractions.len(),
            want: cycles.len(),
        });
    }
    let start = sim.round;
    let mut leaders = Vec::with_capacity(cycles.len());
    let mut contacts: Vec<BTreeSet<usize>> = Vec::with_capacity(cycles.len());
    for (hole, c) in cycles.iter().enumerate() {
        // Each node compares its own coordinates with the aggregated box.
        let on_side = |u: usize, f: fn(&Extent, Point) -> bool| {
            f(&sim.nodes[u].boxes[&hole], sim.positions[u])
        };
        let lead: Vec<usize> = c
            .iter()
            .copied()
            .filter(|&u| on_side(u, |e, p| p.x == e.min_x))
            .collect();
        let [leader] = lead[..] else {
            return Err(OverlayError::LeaderTie(hole));
        };
        let mut set: BTreeSet<usize> = c
            .iter()
            .copied()
            .filter(|&u| on_side(u, |e, p| p.x == e.max_x || p.y == e.min_y || p.y == e.max_y))
            .collect();
        set.extend(abstractions[hole].representatives);
        set.remove(&leader);
        leaders.push(leader);
        contacts.push(set);
    }
    let distinct: BTreeSet<usize> = leaders.iter().copied().collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &a in &distinct {
        pairs.extend(distinct.range(a + 1..).map(|&b| (a, b)));
    }
    for (hole, set) in contacts.iter().enumerate() {
        pairs.extend(set.iter().map(|&v| (leaders[hole], v)));
    }
    let charged = sim.introduce(&pairs)?;

    let before = sim.messages;
    for (hole, &l) in leaders.iter().enumerate() {
        let extent = sim.nodes[l].boxes[&hole];
        for &other in distinct.iter().filter(|&&o| o != l) {
            sim.send(l, other, Payload::Box { extent })?;
        }
    }
    let inter_leader_messages = sim.messages - before;
    sim.advance();
    let mut lists: BTreeMap<usize, Vec<Extent>> = BTreeMap::new();
    for &l in &distinct {
        let mut list: Vec<Extent> = leaders
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x == l)
            .map(|(hole, _)| sim.nodes[l].boxes[&hole])
            .collect();
        list.extend(sim.inbox[l].iter().filter_map(|m| match m.payload {
            Payload::Box { extent } => Some(extent),
            _ => None,
        }));
        list.sort_by(Extent::canonical);
        lists.insert(l, list);
    }
    for (hole, set) in contacts.iter().enumerate() {
        let l = leaders[hole];
        for &v in set {
            for &extent in &lists[&l] {
                sim.send(l, v, Payload::Box { extent })?;
            }
        }
    }
    sim.advance();
    let mut holders: BTreeSet<usize> = distinct.clone();
    for (l, list) in lists {
        sim.nodes[l].list = list;
        sim.nodes[l].touch();
    }
    for u in 0..sim.node_count() {
        let mut got: Vec<Extent> = sim.inbox[u]
            .iter()
            .filter_map(|m| match m.payload {
                Payload::Box { extent } => Some(extent),
                _ => None,
            })
            .collect();
        if got.is_empty() || holders.contains(&u) {
            continue;
        }
        // A node serving several holes hears the list once per leader.
        got.sort_by(Extent::canonical);
        got.dedup_by_key(|e| e.key());
        sim.nodes[u].list = got;
        sim.nodes[u].touch();
        holders.insert(u);
    }
    Ok(DisseminationStats {
        leaders,
        introduction_waves: 1,
        charged_rounds: charged,
        inter_leader_messages,
        list_holders: holders.into_iter().collect(),
        rounds: sim.round - start + 1,
    })
}

/// Per-instance summary of the whole distributed setup.
#[derive(Clone, Debug, Serialize)]
pub struct SetupReport {
    pub nodes: usize,
    pub holes: usize,
    pub aggregation_rounds: u32,
    pub largest_hole: usize,
    pub total_rounds: u32,
    /// `total_rounds / log2(n)^2`.
    pub round_constant: f64,
    pub max_messages_per_node_round: u32,
    /// Largest final storage among nodes without the box list.
    pub max_plain_storage: usize,
    /// Largest final storage among list holders.
    pub max_holder_storage: usize,
    /// Largest storage any node held mid-protocol.
    pub max_peak_storage: usize,
    pub boxes_match: bool,
    pub lists_match: bool,
}

/// Runs aggregation and dissemination on a network and compares the result
/// with the centralized abstractions.
pub fn simulate_setup(
    net: &NetworkInstance,
    holes: &HoleSet,
    abstractions: &[HoleAbstraction],
) -> Result<SetupReport, OverlayError> {
    let mut sim = RoundSim::for_network(net);
    let cycles: Vec<Vec<usize>> = holes.holes.iter().map(|h| h.cycle.clone()).collect();
    let agg = run_hole_aggregation(&mut sim, &cycles)?;
    let boxes_match = agg.boxes.len() == abstractions.len()
        && agg
            .boxes
            .iter()
            .zip(abstractions)
            .all(|(b, a)| *b == a.bbox)
        && cycles.iter().enumerate().all(|(hole, c)| {
            c.iter()
                .all(|&u| sim.node_box(u, hole) == Some(agg.boxes[hole]))
        });
    let dis = elect_leader_and_disseminate(&mut sim, abstractions)?;
    let mut central: Vec<Extent> = abstractions
        .iter()
        .map(|a| Extent {
            min_x: a.bbox.min_x,
            max_x: a.bbox.max_x,
            min_y: a.bbox.min_y,
            max_y: a.bbox.max_y,
        })
        .collect();
    central.sort_by(Extent::canonical);
    let lists_match = dis
        .list_holders
        .iter()
        .all(|&u| sim.nodes[u].list == central);
    let n = sim.node_count();
    let (mut plain, mut holder) = (0, 0);
    for u in 0..n {
        let w = sim.storage_words(u);
        if sim.holds_box_list(u) {
            holder = holder.max(w);
        } else {
            plain = plain.max(w);
        }
    }
    let total_rounds = agg.stats.rounds + dis.rounds;
    let log = (n.max(2) as f64).log2();
    Ok(SetupReport {
        nodes: n,
        holes: cycles.len(),
        aggregation_rounds: agg.stats.rounds,
        largest_hole: cycles.iter().map(Vec::len).max().unwrap_or(0),
        total_rounds,
        round_constant: total_rounds as f64 / (log * log),
        max_messages_per_node_round: agg.stats.max_messages_per_node_round,
        max_plain_storage: plain,
        max_holder_storage: holder,
        max_peak_storage: (0..n).map(|u| sim.peak_storage_words(u)).max().unwrap_or(0),
        boxes_match,
        lists_match,
    })
}
