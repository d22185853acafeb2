//! Gate-level IR for radix-`d` QFT circuits.
//!
//! Wires are 0-based in code and in serialized documents; rendered diagrams
//! label them `q1..qn`. Gates apply left to right.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{controlled_phase, FactorLabel, FactorizationPlan, PlanKind, Reversal};
use crate::spectral::{dft_matrix, r_gate};
use crate::tensor::{
    global_dim, projector, shift, DenseLimit, DenseMatrix, DenseVector, KronTerm,
    StructuredOperator, ONE,
};
use crate::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// `F_2`; only valid on qubits.
    Hadamard,
    /// `F_d` on a `d`-level wire.
    Fourier,
    /// `R_level` on one wire.
    PhaseR { level: usize },
    /// Cyclic shift; Pauli-X on qubits.
    Not,
    /// `Σ_ℓ E_ℓ(control) ⊗ R_level^ℓ(target)`.
    ControlledR { level: usize },
    /// `Σ_ℓ E_ℓ(control) ⊗ X^ℓ(target)`; CNOT on qubits, SUM on qudits.
    ControlledNot,
    /// Exchanges the `control` and `target` wires.
    Swap,
}

impl GateKind {
    fn name(&self) -> &'static str {
        match self {
            GateKind::Hadamard => "hadamard",
            GateKind::Fourier => "fourier",
            GateKind::PhaseR { .. } => "phase_r",
            GateKind::Not => "not",
            GateKind::ControlledR { .. } => "controlled_r",
            GateKind::ControlledNot => "controlled_not",
            GateKind::Swap => "swap",
        }
    }

    fn level(&self) -> Option<usize> {
        match *self {
            GateKind::PhaseR { level } | GateKind::ControlledR { level } => Some(level),
            _ => None,
        }
    }

    fn two_wire(&self) -> bool {
        matches!(
            self,
            GateKind::ControlledR { .. } | GateKind::ControlledNot | GateKind::Swap
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    /// Apply the adjoint of the gate.
    pub inverse: bool,
}

impl Gate {
    pub fn single(kind: GateKind, target: usize) -> Self {
        Self {
            kind,
            target,
            control: None,
            inverse: false,
        }
    }

    pub fn controlled(kind: GateKind, control: usize, target: usize) -> Self {
        Self {
            kind,
            target,
            control: Some(control),
            inverse: false,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inverse: !self.inverse,
            ..*self
        }
    }

    pub fn wires(&self) -> Vec<usize> {
        std::iter::once(self.target).chain(self.control).collect()
    }

    fn validate(&self, n: usize, d: usize) -> Result<()> {
        for w in self.wires() {
            if w >= n {
                return Err(Error::WireOutOfRange { wire: w, n });
            }
        }
        match (self.kind.two_wire(), self.control) {
            (true, None) => {
                return Err(Error::invalid(format!(
                    "{} needs a control wire",
                    self.kind.name()
                )))
            }
            (false, Some(_)) => {
                return Err(Error::invalid(format!(
                    "{} does not take a control wire",
                    self.kind.name()
                )))
            }
            (true, Some(c)) if c == self.target => return Err(Error::WireConflict(c)),
            _ => {}
        }
        if self.kind == GateKind::Hadamard && d != 2 {
            return Err(Error::invalid(
                "hadamard is only defined for d = 2; use fourier",
            ));
        }
        if self.kind.level() == Some(0) {
            return Err(Error::invalid("phase level must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    d: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, d: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("circuit needs at least one wire"));
        }
        if d < 2 {
            return Err(Error::invalid(format!(
                "local dimension must be at least 2, got {d}"
            )));
        }
        for g in &gates {
            g.validate(n, d)?;
        }
        Ok(Self { n, d, gates })
    }

    pub fn empty(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, Vec::new())
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n, self.d)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Conjugate-reversed circuit.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            d: self.d,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Dense unitary, built column-block-wise from sparse gate expansions.
    pub fn unitary(&self) -> Result<DenseMatrix> {
        self.unitary_within(DenseLimit::default())
    }

    pub fn unitary_within(&self, limit: DenseLimit) -> Result<DenseMatrix> {
        let dim = dense_dim(self.n, self.d, limit)?;
        let mut block = DenseMatrix::identity(dim).as_slice().to_vec();
        for g in &self.gates {
            let op = gate_unitary(g, self.n, self.d)?.to_sparse(limit)?;
            block = op.apply_block(&block, dim);
        }
        DenseMatrix::new(dim, dim, block)
    }
}

fn dense_dim(n: usize, d: usize, limit: DenseLimit) -> Result<usize> {
    let dim = global_dim(n, d).ok_or(Error::DenseLimitExceeded {
        dim: usize::MAX,
        limit: limit.0,
    })?;
    limit.check(dim)?;
    Ok(dim)
}

/// Embeds a gate into an `n`-wire structured operator.
pub fn gate_unitary(g: &Gate, n: usize, d: usize) -> Result<StructuredOperator> {
    g.validate(n, d)?;
    let op = match (g.kind, g.control) {
        (GateKind::Hadamard | GateKind::Fourier, _) => {
            StructuredOperator::single_site(n, d, g.target, &dft_matrix(d)?)?
        }
        (GateKind::PhaseR { level }, _) => {
            StructuredOperator::single_site(n, d, g.target, &r_gate(level, d))?
        }
        (GateKind::Not, _) => StructuredOperator::single_site(n, d, g.target, &shift(d))?,
        (GateKind::ControlledR { level }, Some(c)) => controlled_phase(n, d, c, g.target, level)?,
        (GateKind::ControlledNot, Some(c)) => {
            let x = shift(d);
            let terms = (0..d)
                .map(|l| {
                    let power = x.pow(l as u32)?;
                    Ok(KronTerm::embed(
                        n,
                        d,
                        ONE,
                        &[(c, projector(d, l)), (g.target, power)],
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            StructuredOperator::new(n, d, terms)?
        }
        (GateKind::Swap, Some(c)) => {
            // Σ_{a,b} |a⟩⟨b| ⊗ |b⟩⟨a|
            let unit = |a: usize, b: usize| {
                let mut m = DenseMatrix::zeros(d, d);
                m[(a, b)] = ONE;
                m
            };
            let terms = (0..d)
                .flat_map(|a| (0..d).map(move |b| (a, b)))
                .map(|(a, b)| {
                    KronTerm::embed(n, d, ONE, &[(c, unit(a, b)), (g.target, unit(b, a))])
                })
                .collect();
            StructuredOperator::new(n, d, terms)?
        }
        (_, None) => unreachable!("validated two-wire gates carry a control"),
    };
    Ok(if g.inverse { op.adjoint() } else { op })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapStyle {
    #[default]
    KeepSwap,
    ThreeCnot,
}

/// Lowers a QFT plan to named gates: each Fourier factor becomes a
/// Hadamard/Fourier gate, each controlled-phase factor a controlled-R with
/// the plan's control/target placement, and the digit reversal becomes
/// `⌊n/2⌋` swaps (or three CNOTs each).
pub fn lower_to_circuit(plan: &FactorizationPlan, swap_style: SwapStyle) -> Result<Circuit> {
    if plan.kind() != PlanKind::Qft {
        return Err(Error::Unsupported(
            "only QFT plans can be lowered; FFT butterflies are not local gates".into(),
        ));
    }
    if *plan.reversal_spec() != Reversal::DigitReversal {
        return Err(Error::Unsupported(
            "only digit-reversal outputs can be lowered to swaps".into(),
        ));
    }
    let (n, d) = (plan.n(), plan.d());
    if swap_style == SwapStyle::ThreeCnot && d != 2 {
        return Err(Error::Unsupported(format!(
            "three-CNOT swaps are only available for qubits (d = {d})"
        )));
    }
    let mut gates = Vec::with_capacity(plan.factors().len() + 3 * (n / 2));
    for label in plan.labels() {
        gates.push(match label {
            FactorLabel::Fourier { site } => {
                let kind = if d == 2 {
                    GateKind::Hadamard
                } else {
                    GateKind::Fourier
                };
                Gate::single(kind, site)
            }
            FactorLabel::ControlledPhase {
                control,
                target,
                level,
            } => Gate::controlled(GateKind::ControlledR { level }, control, target),
            FactorLabel::Butterfly { .. } => {
                return Err(Error::Unsupported("butterfly factor in a QFT plan".into()))
            }
        });
    }
    for i in 0..n / 2 {
        let (a, b) = (i, n - 1 - i);
        match swap_style {
            SwapStyle::KeepSwap => gates.push(Gate::controlled(GateKind::Swap, a, b)),
            SwapStyle::ThreeCnot => {
                gates.push(Gate::controlled(GateKind::ControlledNot, a, b));
                gates.push(Gate::controlled(GateKind::ControlledNot, b, a));
                gates.push(Gate::controlled(GateKind::ControlledNot, a, b));
            }
        }
    }
    Circuit::new(n, d, gates)
}

/// Applies each gate in order through its structured operator.
pub fn simulate_dense(c: &Circuit, x: &DenseVector) -> Result<DenseVector> {
    simulate_dense_within(c, x, DenseLimit::default())
}

pub fn simulate_dense_within(
    c: &Circuit,
    x: &DenseVector,
    limit: DenseLimit,
) -> Result<DenseVector> {
    let dim = dense_dim(c.n, c.d, limit)?;
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    let mut y = x.clone();
    for g in &c.gates {
        y = gate_unitary(g, c.n, c.d)?.apply(&y)?;
    }
    Ok(y)
}

// ---------------------------------------------------------------------------
// Counting

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub hadamard_or_fourier: usize,
    pub controlled_r: usize,
    pub cnot: usize,
    pub swap: usize,
    pub phase_r: usize,
    pub not: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.hadamard_or_fourier
            + self.controlled_r
            + self.cnot
            + self.swap
            + self.phase_r
            + self.not
    }
}

pub fn count_gates(c: &Circuit) -> GateCounts {
    let mut counts = GateCounts::default();
    for g in &c.gates {
        match g.kind {
            GateKind::Hadamard | GateKind::Fourier => counts.hadamard_or_fourier += 1,
            GateKind::ControlledR { .. } => counts.controlled_r += 1,
            GateKind::ControlledNot => counts.cnot += 1,
            GateKind::Swap => counts.swap += 1,
            GateKind::PhaseR { .. } => counts.phase_r += 1,
            GateKind::Not => counts.not += 1,
        }
    }
    counts
}

/// Gate counts next to the closed-form QFT figures.
///
/// The reversal costs `⌊n/2⌋` swaps of three CNOTs each, so the
/// construction needs `3⌊n/2⌋` CNOTs; the tabulated figure `⌊3n/2⌋` is
/// reported alongside and differs by one for odd `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QftCountReport {
    pub n: usize,
    pub counts: GateCounts,
    pub expected_fourier: usize,
    pub expected_controlled_r: usize,
    pub expected_swap: usize,
    /// CNOTs emitted, plus three per remaining swap.
    pub construction_cnot: usize,
    pub table_one_cnot: usize,
    pub cnot_figures_agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn qft_count_report(c: &Circuit) -> QftCountReport {
    let n = c.n;
    let counts = count_gates(c);
    let construction_cnot = counts.cnot + 3 * counts.swap;
    let table_one_cnot = 3 * n / 2;
    let agree = construction_cnot == table_one_cnot;
    QftCountReport {
        n,
        counts,
        expected_fourier: n,
        expected_controlled_r: n * (n - 1) / 2,
        expected_swap: n / 2,
        construction_cnot,
        table_one_cnot,
        cnot_figures_agree: agree,
        note: (!agree).then(|| {
            format!(
                "swap construction uses 3*floor(n/2) = {construction_cnot} CNOTs; \
                 closed form floor(3n/2) gives {table_one_cnot}"
            )
        }),
    }
}

// ---------------------------------------------------------------------------
// Equivalent variants

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantPolicy {
    /// Exchange control and target on a subset of the controlled-R gates.
    SwapControlTarget,
    /// Reorder each maximal run of adjacent controlled-R gates.
    ShuffleCommutingCr,
    Both,
}

pub const DEFAULT_MAX_VARIANTS: usize = 256;

pub fn equivalent_variants(c: &Circuit, policy: VariantPolicy, seed: u64) -> Vec<Circuit> {
    equivalent_variants_limited(c, policy, seed, DEFAULT_MAX_VARIANTS)
}

/// Circuits unitarily equal to `c`, the original first.
///
/// When the full variant space fits in `max_variants` it is enumerated in a
/// fixed order: run orderings in lexicographic mixed-radix order (first run
/// most significant), and for each ordering all flip masks in increasing
/// binary order (bit `i` flips the `i`-th controlled-R gate). Otherwise the
/// original is followed by distinct seeded random samples.
pub fn equivalent_variants_limited(
    c: &Circuit,
    policy: VariantPolicy,
    seed: u64,
    max_variants: usize,
) -> Vec<Circuit> {
    let cr: Vec<usize> = c
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| matches!(g.kind, GateKind::ControlledR { .. }))
        .map(|(i, _)| i)
        .collect();
    let flip = matches!(
        policy,
        VariantPolicy::SwapControlTarget | VariantPolicy::Both
    );
    let shuffle = matches!(
        policy,
        VariantPolicy::ShuffleCommutingCr | VariantPolicy::Both
    );
    let runs: Vec<Vec<usize>> = if shuffle {
        cr_runs(&c.gates)
    } else {
        Vec::new()
    };

    let flip_count: usize = if flip {
        u32::try_from(cr.len())
            .ok()
            .and_then(|m| 1usize.checked_shl(m))
            .unwrap_or(usize::MAX)
    } else {
        1
    };
    let order_count = runs
        .iter()
        .try_fold(1usize, |acc, r| acc.checked_mul(factorial(r.len())?))
        .unwrap_or(usize::MAX);
    let total = flip_count.saturating_mul(order_count);
    let max_variants = max_variants.max(1);

    let build = |flips: &[bool], orders: &[Vec<usize>]| -> Circuit {
        let mut gates = c.gates.clone();
        for (&idx, &f) in cr.iter().zip(flips) {
            if f {
                let g = &mut gates[idx];
                let control = g.control.expect("controlled-R has a control");
                g.control = Some(g.target);
                g.target = control;
            }
        }
        let flipped = gates.clone();
        for (run, order) in runs.iter().zip(orders) {
            for (slot, &pick) in run.iter().zip(order) {
                gates[*slot] = flipped[run[pick]];
            }
        }
        Circuit {
            n: c.n,
            d: c.d,
            gates,
        }
    };

    if total <= max_variants {
        let per_run: Vec<Vec<Vec<usize>>> = runs.iter().map(|r| permutations(r.len())).collect();
        let mut out = Vec::with_capacity(total);
        for combo in 0..order_count {
            let mut rem = combo;
            let mut orders = vec![Vec::new(); runs.len()];
            for (slot, perms) in orders.iter_mut().zip(&per_run).rev() {
                *slot = perms[rem % perms.len()].clone();
                rem /= perms.len();
            }
            for mask in 0..flip_count {
                let flips: Vec<bool> = (0..cr.len())
                    .map(|i| flip && (mask >> i) & 1 == 1)
                    .collect();
                out.push(build(&flips, &orders));
            }
        }
        return out;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![c.clone()];
    let mut attempts = 0;
    while out.len() < max_variants && attempts < max_variants * 16 {
        attempts += 1;
        let flips: Vec<bool> = cr.iter().map(|_| flip && rng.random::<bool>()).collect();
        let orders: Vec<Vec<usize>> = runs
            .iter()
            .map(|r| {
                let mut o: Vec<usize> = (0..r.len()).collect();
                o.shuffle(&mut rng);
                o
            })
            .collect();
        let v = build(&flips, &orders);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Maximal runs (length ≥ 2) of adjacent controlled-R gates.
fn cr_runs(gates: &[Gate]) -> Vec<Vec<usize>> {
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for (i, g) in gates.iter().enumerate() {
        if matches!(g.kind, GateKind::ControlledR { .. }) {
            current.push(i);
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.retain(|r| r.len() > 1);
    runs
}

fn factorial(k: usize) -> Option<usize> {
    (1..=k).try_fold(1usize, |acc, x| acc.checked_mul(x))
}

/// All permutations of `0..len` in lexicographic order.
fn permutations(len: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        &mut Vec::with_capacity(len),
        &mut vec![false; len],
        &mut out,
    );
    out
}

// ---------------------------------------------------------------------------
// Text rendering

pub const RENDER_WIRE_LIMIT: usize = 16;

fn gate_label(g: &Gate, d: usize) -> String {
    let base = match g.kind {
        GateKind::Hadamard => "H".to_string(),
        GateKind::Fourier => format!("F{d}"),
        GateKind::PhaseR { level } | GateKind::ControlledR { level } => format!("R{level}"),
        GateKind::Not => "X".to_string(),
        GateKind::ControlledNot => return "(+)".to_string(),
        GateKind::Swap => return "x".to_string(),
    };
    let dg = if g.inverse { "dg" } else { "" };
    format!("[{base}{dg}]")
}

/// ASCII diagram, one column per gate. Wire rows read `q1:`, `q2:`, …;
/// the rows between wires carry only the vertical connectors. Output is a
/// pure function of the circuit. There is no parser for this format.
pub fn render_text(c: &Circuit) -> Result<String> {
    if c.n > RENDER_WIRE_LIMIT {
        return Err(Error::invalid(format!(
            "rendering supports at most {RENDER_WIRE_LIMIT} wires, got {}",
            c.n
        )));
    }
    let label_width = format!("q{}: ", c.n).len();
    let mut wire_rows: Vec<String> = (0..c.n)
        .map(|w| format!("{:<label_width$}", format!("q{}:", w + 1)))
        .collect();
    let mut gap_rows: Vec<String> = vec![" ".repeat(label_width); c.n.saturating_sub(1)];

    for g in &c.gates {
        let target_label = gate_label(g, c.d);
        let mut cells: Vec<Option<String>> = vec![None; c.n];
        cells[g.target] = Some(target_label.clone());
        let (lo, hi) = match g.control {
            Some(ctrl) => {
                cells[ctrl] = Some(if g.kind == GateKind::Swap {
                    "x".into()
                } else {
                    "*".into()
                });
                (ctrl.min(g.target), ctrl.max(g.target))
            }
            None => (g.target, g.target),
        };
        let width = cells
            .iter()
            .flatten()
            .map(String::len)
            .max()
            .unwrap_or(1)
            .max(1)
            + 2;
        for (w, row) in wire_rows.iter_mut().enumerate() {
            let cell = match &cells[w] {
                Some(s) => s.clone(),
                None if w > lo && w < hi => "|".to_string(),
                None => "-".to_string(),
            };
            row.push('-');
            row.push_str(&center(&cell, width, '-'));
        }
        for (gap, row) in gap_rows.iter_mut().enumerate() {
            let cell = if gap >= lo && gap < hi { "|" } else { " " };
            row.push(' ');
            row.push_str(&center(cell, width, ' '));
        }
    }

    let mut out = String::new();
    for w in 0..c.n {
        let _ = writeln!(out, "{}-", wire_rows[w]);
        if w + 1 < c.n {
            let _ = writeln!(out, "{}", gap_rows[w].trim_end());
        }
    }
    Ok(out)
}

fn center(s: &str, width: usize, fill: char) -> String {
    let len = s.chars().count();
    if len >= width {
        return s.to_string();
    }
    let left = (width - len) / 2;
    let right = width - len - left;
    let mut out = String::with_capacity(width);
    out.extend(std::iter::repeat_n(fill, left));
    out.push_str(s);
    out.extend(std::iter::repeat_n(fill, right));
    out
}

// ---------------------------------------------------------------------------
// JSON

/// One gate in a circuit document. Wires are 0-based; `swap` stores its two
/// wires in `control` and `target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    pub target: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inverse: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub gates: Vec<GateDoc>,
}

impl From<&Gate> for GateDoc {
    fn from(g: &Gate) -> Self {
        GateDoc {
            kind: g.kind.name().to_string(),
            level: g.kind.level(),
            control: g.control,
            target: g.target,
            inverse: g.inverse,
        }
    }
}

impl TryFrom<&GateDoc> for Gate {
    type Error = Error;

    fn try_from(doc: &GateDoc) -> Result<Gate> {
        let need_level = || {
            doc.level
                .ok_or_else(|| Error::Malformed(format!("gate kind {:?} needs a level", doc.kind)))
        };
        let kind = match doc.kind.as_str() {
            "hadamard" => GateKind::Hadamard,
            "fourier" => GateKind::Fourier,
            "phase_r" => GateKind::PhaseR {
                level: need_level()?,
            },
            "not" => GateKind::Not,
            "controlled_r" => GateKind::ControlledR {
                level: need_level()?,
            },
            "controlled_not" => GateKind::ControlledNot,
            "swap" => GateKind::Swap,
            other => return Err(Error::Malformed(format!("unknown gate kind {other:?}"))),
        };
        if kind.level().is_none() && doc.level.is_some() {
            return Err(Error::Malformed(format!(
                "gate kind {:?} takes no level",
                doc.kind
            )));
        }
        Ok(Gate {
            kind,
            target: doc.target,
            control: doc.control,
            inverse: doc.inverse,
        })
    }
}

impl Circuit {
    pub fn to_document(&self) -> CircuitDocument {
        CircuitDocument {
            version: SCHEMA_VERSION,
            n: self.n,
            d: self.d,
            gates: self.gates.iter().map(GateDoc::from).collect(),
        }
    }

    pub fn from_document(doc: &CircuitDocument) -> Result<Self> {
        if doc.version != SCHEMA_VERSION {
            return Err(Error::Malformed(format!(
                "unsupported circuit version {}",
                doc.version
            )));
        }
        let gates = doc
            .gates
            .iter()
            .map(Gate::try_from)
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(doc.n, doc.d, gates)
    }
}

pub fn serialize(c: &Circuit) -> Result<String> {
    Ok(serde_json::to_string_pretty(&c.to_document())?)
}

pub fn deserialize(text: &str) -> Result<Circuit> {
    let doc: CircuitDocument = serde_json::from_str(text)?;
    Circuit::from_document(&doc)
}

/// Checks that a circuit's unitary matches `expected` entrywise.
pub fn unitary_residual(c: &Circuit, expected: &DenseMatrix) -> Result<f64> {
    Ok(c.unitary()?.max_abs_diff(expected))
}
