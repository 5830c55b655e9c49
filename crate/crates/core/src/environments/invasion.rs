use std::sync::Arc;

use crate::error::{Error, Result};
use crate::policy::{
    encode_invasion_2x2, encode_invasion_4, encode_neverending, povm_action_subsystem, povm_rotated,
    PovmSet,
};
use crate::qmath::{identity, is_unitary, random_mixed_qubit, random_unitary, CMatrix, DensityMatrix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvasionVariant {
    /// Two symbols, two moves; move 0 = left, 1 = right.
    TwoSymbol,
    /// Two symbols in two colors, four moves labelled `2j + k`.
    FourPercept4Act,
    /// Two symbols in two colors, two moves; color is irrelevant.
    FourPercept2Act,
    /// Two symbols, a fresh random mixed color every cycle, two moves.
    NeverendingColor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    SingleOnb,
    /// A fresh Haar-random `U_R` rotates the percept state every cycle.
    RandomOnbPerCycle,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvasionConfig {
    pub variant: InvasionVariant,
    pub reward_correct: f64,
    pub reward_wrong: f64,
    #[serde(default = "one")]
    pub p_coh: f64,
    #[serde(default)]
    pub reversal_cycle: Option<u64>,
    #[serde(default)]
    pub color_introduction_cycle: Option<u64>,
    #[serde(default = "single_onb")]
    pub basis_mode: BasisMode,
}

fn one() -> f64 {
    1.0
}

fn single_onb() -> BasisMode {
    BasisMode::SingleOnb
}

impl InvasionConfig {
    pub fn new(variant: InvasionVariant, reward_correct: f64, reward_wrong: f64) -> Self {
        Self {
            variant,
            reward_correct,
            reward_wrong,
            p_coh: 1.0,
            reversal_cycle: None,
            color_introduction_cycle: None,
            basis_mode: BasisMode::SingleOnb,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_coh) {
            return Err(Error::invalid(format!("p_coh = {} outside [0, 1]", self.p_coh)));
        }
        if !self.reward_correct.is_finite() || !self.reward_wrong.is_finite() {
            return Err(Error::invalid("rewards must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.variant {
            InvasionVariant::NeverendingColor => 8,
            _ => 4,
        }
    }

    pub fn num_actions(&self) -> usize {
        match self.variant {
            InvasionVariant::FourPercept4Act => 4,
            _ => 2,
        }
    }

    pub fn uses_target(&self) -> bool {
        matches!(self.variant, InvasionVariant::FourPercept4Act | InvasionVariant::FourPercept2Act)
    }

    pub fn reversed(&self, cycle: u64) -> bool {
        self.reversal_cycle.is_some_and(|c| cycle >= c)
    }
}

/// What the attacker shows in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attack {
    pub symbol: usize,
    /// Discrete color for the four-percept variants.
    pub color: Option<usize>,
}

impl Attack {
    /// Percept label used in logs: `2j + k`, or the symbol alone.
    pub fn label(&self) -> usize {
        match self.color {
            Some(k) => 2 * self.symbol + k,
            None => self.symbol,
        }
    }
}

/// The correct action for an attack at a given cycle.
pub fn correct_action(cfg: &InvasionConfig, cycle: u64, attack: Attack) -> usize {
    let flip = cfg.reversed(cycle) as usize;
    let j = attack.symbol ^ flip;
    match cfg.variant {
        InvasionVariant::FourPercept4Act => 2 * j + (attack.color.unwrap_or(0) ^ flip),
        _ => j,
    }
}

/// Reward for `action` against `attack`.
pub fn invasion_step(cfg: &InvasionConfig, cycle: u64, action: usize, attack: Attack) -> f64 {
    if action == correct_action(cfg, cycle, attack) {
        cfg.reward_correct
    } else {
        cfg.reward_wrong
    }
}

/// Encoded percept of one cycle together with the POVM to measure.
#[derive(Debug, Clone)]
pub struct InvasionPercept {
    pub attack: Attack,
    pub rho: DensityMatrix,
    pub povm: Arc<PovmSet>,
}

/// Environment state shared by all cycles of one agent.
#[derive(Debug, Clone)]
pub struct InvasionGame {
    cfg: InvasionConfig,
    target: CMatrix,
    povm: Arc<PovmSet>,
}

impl InvasionGame {
    /// `target` is the unitary `U_T` rotating the four-percept POVM; it is
    /// ignored by the other variants.
    pub fn new(cfg: InvasionConfig, target: Option<CMatrix>) -> Result<Self> {
        cfg.validate()?;
        let dim = cfg.dim();
        let target = match target {
            Some(t) if cfg.uses_target() => {
                if t.shape() != (dim, dim) || !is_unitary(&t, 1e-10) {
                    return Err(Error::invalid("target must be a unitary of the memory dimension"));
                }
                t
            }
            Some(_) | None => identity(dim),
        };
        let povm = match cfg.variant {
            InvasionVariant::TwoSymbol => povm_action_subsystem(2, 2),
            InvasionVariant::FourPercept4Act => povm_rotated(&target, false)?,
            InvasionVariant::FourPercept2Act => povm_rotated(&target, true)?,
            InvasionVariant::NeverendingColor => povm_action_subsystem(4, 2),
        };
        Ok(Self { cfg, target, povm: Arc::new(povm) })
    }

    /// Draws a Haar-random target for the four-percept variants.
    pub fn with_random_target(cfg: InvasionConfig, rng: &mut RngStream) -> Result<Self> {
        let target = cfg.uses_target().then(|| random_unitary(cfg.dim(), rng));
        Self::new(cfg, target)
    }

    pub fn config(&self) -> &InvasionConfig {
        &self.cfg
    }

    pub fn target(&self) -> &CMatrix {
        &self.target
    }

    pub fn povm(&self) -> &Arc<PovmSet> {
        &self.povm
    }

    pub fn draw_attack(&self, cycle: u64, rng: &mut RngStream) -> Attack {
        let symbol = rng.index(2);
        let color = match self.cfg.variant {
            InvasionVariant::FourPercept4Act | InvasionVariant::FourPercept2Act => {
                let single = self.cfg.color_introduction_cycle.is_some_and(|c| cycle < c);
                Some(if single { 0 } else { rng.index(2) })
            }
            _ => None,
        };
        Attack { symbol, color }
    }

    /// Attacks that can occur at `cycle`, with their probabilities.
    pub fn attack_distribution(&self, cycle: u64) -> Vec<(Attack, f64)> {
        match self.cfg.variant {
            InvasionVariant::FourPercept4Act | InvasionVariant::FourPercept2Act => {
                let single = self.cfg.color_introduction_cycle.is_some_and(|c| cycle < c);
                let colors: &[usize] = if single { &[0] } else { &[0, 1] };
                let p = 1.0 / (2 * colors.len()) as f64;
                (0..2)
                    .flat_map(|j| colors.iter().map(move |&k| (Attack { symbol: j, color: Some(k) }, p)))
                    .collect()
            }
            _ => (0..2).map(|j| (Attack { symbol: j, color: None }, 0.5)).collect(),
        }
    }

    /// Unrotated percept state of `attack`. The neverending-color variant
    /// has no fixed state and is rejected.
    pub fn encode(&self, attack: Attack) -> Result<DensityMatrix> {
        match self.cfg.variant {
            InvasionVariant::TwoSymbol => encode_invasion_2x2(attack.symbol, self.cfg.p_coh),
            InvasionVariant::FourPercept4Act | InvasionVariant::FourPercept2Act => {
                encode_invasion_4(attack.symbol, attack.color.unwrap_or(0))
            }
            InvasionVariant::NeverendingColor => Err(Error::invalid("neverending colors have no fixed percept state")),
        }
    }

    /// Draws an attack and builds its state and measurement.
    pub fn invasion_percept(&self, cycle: u64, rng: &mut RngStream) -> Result<InvasionPercept> {
        let attack = self.draw_attack(cycle, rng);
        let rho = match self.cfg.variant {
            InvasionVariant::NeverendingColor => encode_neverending(attack.symbol, &random_mixed_qubit(rng))?,
            _ => self.encode(attack)?,
        };
        match self.cfg.basis_mode {
            BasisMode::SingleOnb => Ok(InvasionPercept { attack, rho, povm: self.povm.clone() }),
            BasisMode::RandomOnbPerCycle => {
                let u_r = random_unitary(self.cfg.dim(), rng);
                self.rotated(attack, rho, &u_r)
            }
        }
    }

    /// State `U_R ρ U_R†` measured with the POVM conjugated by `U_T U_R U_T†`,
    /// so that `U_T` remains an optimal memory.
    pub fn rotated(&self, attack: Attack, rho: DensityMatrix, u_r: &CMatrix) -> Result<InvasionPercept> {
        let rho = rho.conjugate(u_r)?;
        let v = &self.target * u_r * self.target.adjoint();
        let povm = Arc::new(self.povm.conjugate(&v)?);
        Ok(InvasionPercept { attack, rho, povm })
    }

    pub fn reward(&self, cycle: u64, action: usize, attack: Attack) -> f64 {
        invasion_step(&self.cfg, cycle, action, attack)
    }
}
