//! Bundled demonstration systems.
//!
//! * [`slam_two_robot`]: a planar two-vehicle cooperative localization
//!   setup. Each robot integrates velocity inputs (so the plant matrix is
//!   zero), measures its own position plus the relative position of a
//!   static landmark, and shares a position estimate with the other robot.
//!   Neither robot can detect the full state alone; the exchange makes the
//!   network detectable.
//! * [`directed_ring`]: six observers around a directed ring watch an
//!   unstable six-state plant, each measuring two adjacent coordinates.
//!   Three communication variants show how the choice of transmitted
//!   coordinates decides detectability of the whole network.

use crate::digraph::Digraph;
use crate::lti::{MeasurementChannel, Plant};
use crate::network::{CommScheme, ObserverNetwork};
use nalgebra::DMatrix;

/// Positions of robot 1, robot 2 and the landmark stacked as
/// `(x1, y1, x2, y2, xL, yL)`; pure integrator dynamics.
pub fn slam_plant() -> Plant {
    let a = DMatrix::<f64>::zeros(6, 6);
    let mut b2 = DMatrix::<f64>::zeros(6, 4);
    b2.view_mut((0, 0), (4, 4))
        .copy_from(&DMatrix::identity(4, 4));
    Plant::with_disturbance(a, Some(b2)).unwrap()
}

/// Robot 1's output: landmark relative to itself, plus its own position.
pub fn slam_c1() -> DMatrix<f64> {
    let mut c = DMatrix::<f64>::zeros(4, 6);
    c.view_mut((0, 0), (2, 2)).copy_from(&(-DMatrix::identity(2, 2)));
    c.view_mut((0, 4), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    c.view_mut((2, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    c
}

/// Robot 2's output: landmark relative to itself, plus its own position.
pub fn slam_c2() -> DMatrix<f64> {
    let mut c = DMatrix::<f64>::zeros(4, 6);
    c.view_mut((0, 2), (2, 2)).copy_from(&(-DMatrix::identity(2, 2)));
    c.view_mut((0, 4), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    c.view_mut((2, 2), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    c
}

/// Robot 1 broadcasts the estimate of robot 2's position.
pub fn slam_h1() -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(2, 6);
    h.view_mut((0, 2), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    h
}

/// Robot 2 broadcasts the estimate of robot 1's position.
pub fn slam_h2() -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(2, 6);
    h.view_mut((0, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    h
}

fn slam_channels() -> Vec<MeasurementChannel> {
    let d = DMatrix::<f64>::zeros(4, 4);
    let dbar = DMatrix::<f64>::identity(4, 4);
    vec![
        MeasurementChannel::with_noise(slam_c1(), Some(d.clone()), Some(dbar.clone())).unwrap(),
        MeasurementChannel::with_noise(slam_c2(), Some(d), Some(dbar)).unwrap(),
    ]
}

/// The two-robot network with per-node communication matrices.
pub fn slam_two_robot() -> ObserverNetwork {
    ObserverNetwork::new(
        slam_plant(),
        slam_channels(),
        CommScheme::PerNode(vec![slam_h1(), slam_h2()]),
        Digraph::new(2, [(0, 1), (1, 0)]).unwrap(),
    )
    .unwrap()
}

/// The same network with the shared matrix `H1 + H2` (weighted
/// disagreements instead of innovations); detectability is unaffected.
pub fn slam_two_robot_shared() -> ObserverNetwork {
    ObserverNetwork::new(
        slam_plant(),
        slam_channels(),
        CommScheme::Shared(slam_h1() + slam_h2()),
        Digraph::new(2, [(0, 1), (1, 0)]).unwrap(),
    )
    .unwrap()
}

/// Six-state plant with every eigenvalue in the open right half-plane.
pub fn ring_plant_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        6,
        6,
        &[
            0.3775, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.2959, 0.3510, 0.0, 0.0, 0.0, 0.0, //
            1.4751, 0.6232, 1.0078, 0.0, 0.0, 0.0, //
            0.2340, 0.0, 0.0, 0.5596, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.4437, 1.1878, -0.0215, //
            0.0, 0.0, 0.0, 0.0, 2.2023, 1.0039,
        ],
    )
}

/// Communication variants for the six-node ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingComm {
    /// Transmit the full estimate vector.
    Identity,
    /// Transmit coordinates 3 and 5; the communication pair stays
    /// observable.
    Rows35,
    /// Transmit coordinates 2 and 5; coordinate 3 is invisible to the
    /// communication pair and the network loses detectability.
    Rows25,
}

fn coordinate_rows(coords: &[usize]) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(coords.len(), 6);
    for (row, &c) in coords.iter().enumerate() {
        h[(row, c - 1)] = 1.0;
    }
    h
}

/// Node `i` measures coordinates `i` and `i+1` (cyclically) of the plant.
pub fn ring_measurement(i: usize) -> DMatrix<f64> {
    coordinate_rows(&[i + 1, (i + 1) % 6 + 1])
}

/// The six-node directed-ring network with the chosen communication
/// matrix.
pub fn directed_ring(comm: RingComm) -> ObserverNetwork {
    let h = match comm {
        RingComm::Identity => DMatrix::identity(6, 6),
        RingComm::Rows35 => coordinate_rows(&[3, 5]),
        RingComm::Rows25 => coordinate_rows(&[2, 5]),
    };
    let channels = (0..6)
        .map(|i| MeasurementChannel::new(ring_measurement(i)).unwrap())
        .collect();
    let graph = Digraph::new(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
    ObserverNetwork::new(Plant::new(ring_plant_matrix()).unwrap(), channels, CommScheme::Shared(h), graph)
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slam_shapes() {
        let net = slam_two_robot();
        assert_eq!(net.state_dim(), 6);
        assert_eq!(net.num_nodes(), 2);
        assert_eq!(net.channels()[0].c(), &slam_c1());
        assert_eq!(net.comm_matrix(1), &slam_h2());
        assert_eq!(net.plant().b2().unwrap().shape(), (6, 4));
    }

    #[test]
    fn ring_measurements_wrap_around() {
        let c6 = ring_measurement(5);
        assert_eq!(c6[(0, 5)], 1.0); // coordinate 6
        assert_eq!(c6[(1, 0)], 1.0); // coordinate 1
        let c2 = ring_measurement(1);
        assert_eq!(c2[(0, 1)], 1.0);
        assert_eq!(c2[(1, 2)], 1.0);
    }
}
