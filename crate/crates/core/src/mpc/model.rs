//! Decoupled double-integrator prediction model used inside the optimizer.

use nalgebra::{Matrix3, SMatrix, SVector, Vector2, Vector3};

use crate::dynamics::PlantState;
use crate::kinematics::{yaw_rotation, ChainState};
use crate::scalar::{c, Real};

pub const STATE_DIM: usize = 12;
pub const INPUT_DIM: usize = 6;

/// `[p(3), ṗ(3), ψ, ψ̇, Θ(2), Θ̇(2)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterState<T: Real>(pub SVector<T, STATE_DIM>);

/// `[a_d(3), ψ̈, Θ̈_d(2)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput<T: Real>(pub SVector<T, INPUT_DIM>);

/// Position/velocity index pairs of the independent double integrators.
const CHAINS: [(usize, usize); 6] = [(0, 3), (1, 4), (2, 5), (6, 7), (8, 10), (9, 11)];

impl<T: Real> OuterState<T> {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn new(
        position: Vector3<T>,
        velocity: Vector3<T>,
        yaw: T,
        yaw_rate: T,
        joints: Vector2<T>,
        joint_rates: Vector2<T>,
    ) -> Self {
        let mut x = SVector::<T, STATE_DIM>::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&position);
        x.fixed_rows_mut::<3>(3).copy_from(&velocity);
        x[6] = yaw;
        x[7] = yaw_rate;
        x.fixed_rows_mut::<2>(8).copy_from(&joints);
        x.fixed_rows_mut::<2>(10).copy_from(&joint_rates);
        Self(x)
    }

    /// Projects the full plant state, dropping roll and pitch.
    pub fn from_plant(s: &PlantState<T>) -> Self {
        let yaw_rate = s.euler_rates().map(|r| r[2]).unwrap_or_else(|_| T::zero());
        Self::new(s.position, s.velocity, s.euler[2], yaw_rate, s.joints, s.joint_rates)
    }

    pub fn yaw(&self) -> T {
        self.0[6]
    }

    pub fn yaw_rate(&self) -> T {
        self.0[7]
    }
}

impl<T: Real> ChainState<T> for OuterState<T> {
    fn position(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(0).into_owned()
    }
    fn velocity(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(3).into_owned()
    }
    fn rotation(&self) -> Matrix3<T> {
        yaw_rotation(self.yaw())
    }
    fn angular_velocity(&self) -> Vector3<T> {
        Vector3::new(T::zero(), T::zero(), self.yaw_rate())
    }
    fn joints(&self) -> Vector2<T> {
        self.0.fixed_rows::<2>(8).into_owned()
    }
    fn joint_rates(&self) -> Vector2<T> {
        self.0.fixed_rows::<2>(10).into_owned()
    }
}

impl<T: Real> ControlInput<T> {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn new(accel: Vector3<T>, yaw_accel: T, joint_accel: Vector2<T>) -> Self {
        Self(SVector::from([accel[0], accel[1], accel[2], yaw_accel, joint_accel[0], joint_accel[1]]))
    }

    pub fn accel(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn yaw_accel(&self) -> T {
        self.0[3]
    }

    pub fn joint_accel(&self) -> Vector2<T> {
        self.0.fixed_rows::<2>(4).into_owned()
    }
}

/// Continuous-time `(A, B)` of the block double integrator.
pub fn continuous<T: Real>() -> (SMatrix<T, STATE_DIM, STATE_DIM>, SMatrix<T, STATE_DIM, INPUT_DIM>) {
    let mut a = SMatrix::zeros();
    let mut b = SMatrix::zeros();
    for (k, &(pos, vel)) in CHAINS.iter().enumerate() {
        a[(pos, vel)] = T::one();
        b[(vel, k)] = T::one();
    }
    (a, b)
}

/// Zero-order-hold discretization of the prediction model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model<T: Real> {
    pub a: SMatrix<T, STATE_DIM, STATE_DIM>,
    pub b: SMatrix<T, STATE_DIM, INPUT_DIM>,
    pub dt: T,
}

/// Exact ZOH: `A` is nilpotent of order two, so the exponential series stops
/// after the linear term.
pub fn discretize<T: Real>(dt: T) -> Model<T> {
    let (a, b) = continuous::<T>();
    let eye = SMatrix::<T, STATE_DIM, STATE_DIM>::identity();
    let half: T = c(0.5);
    Model { a: eye + a * dt, b: b * dt + a * b * (dt * dt * half), dt }
}

impl<T: Real> Model<T> {
    pub fn step(&self, x: &OuterState<T>, u: &ControlInput<T>) -> OuterState<T> {
        OuterState(self.a * x.0 + self.b * u.0)
    }
}

/// Rolls the model forward; the result has `u_seq.len() + 1` states.
pub fn predict<T: Real>(x0: &OuterState<T>, u_seq: &[ControlInput<T>], model: &Model<T>) -> Vec<OuterState<T>> {
    let mut out = Vec::with_capacity(u_seq.len() + 1);
    out.push(*x0);
    for u in u_seq {
        let next = model.step(out.last().unwrap(), u);
        out.push(next);
    }
    out
}
