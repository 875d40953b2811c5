//! Crossbar, tile, CE and chip allocation for the adjacency slices and
//! layer weights, plus on-chip memory accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyConstants;
use crate::graph::GcnDims;
use crate::noc::NocConfig;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("hardware config: {0}")]
    InvalidHardware(String),
    #[error("cannot split {nodes} nodes over {k} CEs")]
    KOutOfRange { k: u64, nodes: u64 },
    #[error("GCN needs at least one layer")]
    NoLayers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    /// Rows = columns of one crossbar (PE) array.
    pub crossbar_dim: u32,
    pub cell_bits: u32,
    pub weight_bits: u32,
    pub activation_bits: u32,
    /// Bits stored per adjacency entry; 1 for a binary adjacency matrix.
    pub adjacency_bits: u32,
    pub adc_bits: u32,
    pub pes_per_tile: u32,
    pub tiles_per_ce: u32,
    pub ces_per_chip: u32,
    pub clock_hz: f64,
    /// Cycles per bit-serial crossbar phase (read, ADC conversion, shift-add).
    pub crossbar_phase_cycles: u64,
    pub noc: NocConfig,
    pub energy: EnergyConstants,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            crossbar_dim: 128,
            cell_bits: 2,
            weight_bits: 4,
            activation_bits: 4,
            adjacency_bits: 1,
            adc_bits: 4,
            pes_per_tile: 16,
            tiles_per_ce: 30,
            ces_per_chip: 16,
            clock_hz: 1e9,
            crossbar_phase_cycles: 8,
            noc: NocConfig::default(),
            energy: EnergyConstants::default(),
        }
    }
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<(), MapError> {
        let bad = |msg: &str| Err(MapError::InvalidHardware(msg.to_string()));
        let counts = [
            self.crossbar_dim,
            self.cell_bits,
            self.weight_bits,
            self.activation_bits,
            self.adjacency_bits,
            self.adc_bits,
            self.pes_per_tile,
            self.tiles_per_ce,
            self.ces_per_chip,
        ];
        if counts.contains(&0) || self.crossbar_phase_cycles == 0 {
            return bad("all counts must be positive");
        }
        if self.cell_bits > self.weight_bits {
            return bad("cell_bits must not exceed weight_bits");
        }
        if !self.crossbar_dim.is_power_of_two() || self.crossbar_dim < 16 {
            return bad("crossbar_dim must be a power of two >= 16");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz must be positive");
        }
        self.noc
            .validate()
            .map_err(|e| MapError::InvalidHardware(e.to_string()))?;
        self.energy
            .validate()
            .map_err(MapError::InvalidHardware)?;
        Ok(())
    }

    /// Bytes of crossbar storage one fully populated chip holds.
    pub fn chip_capacity_bytes(&self) -> u64 {
        memory_footprint(self.chip_capacity_crossbars(), self)
    }

    pub fn chip_capacity_crossbars(&self) -> u64 {
        u64::from(self.ces_per_chip) * u64::from(self.tiles_per_ce) * u64::from(self.pes_per_tile)
    }
}

/// Crossbars needed to hold a `rows x cols` matrix of `value_bits` values,
/// mapped as is (no transformation, no sparsity exploitation).
pub fn crossbars_for_matrix(rows: u64, cols: u64, value_bits: u32, hw: &HardwareConfig) -> u64 {
    let dim = u64::from(hw.crossbar_dim);
    let cells_per_value = u64::from(value_bits.div_ceil(hw.cell_bits));
    rows.div_ceil(dim) * (cols * cells_per_value).div_ceil(dim)
}

/// Bytes of storage behind `crossbars` arrays.
pub fn memory_footprint(crossbars: u64, hw: &HardwareConfig) -> u64 {
    let dim = u64::from(hw.crossbar_dim);
    crossbars * dim * dim * u64::from(hw.cell_bits) / 8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingPlan {
    pub k: u64,
    pub num_nodes: u64,
    /// Each CE holds an `N x ceil(N/k)` slice of the adjacency matrix.
    pub adjacency_slice_rows: u64,
    pub adjacency_slice_cols: u64,
    pub crossbars_adjacency_per_ce: u64,
    /// One entry per layer; every CE stores all of them.
    pub crossbars_weights_per_layer: Vec<u64>,
    pub tiles_adjacency_per_ce: u64,
    pub tiles_weights_per_ce: u64,
    pub total_tiles: u64,
    pub total_crossbars: u64,
    pub chips_required: u64,
    pub memory_bytes_used: u64,
    pub chip_capacity_bytes: u64,
    pub utilization: f64,
}

impl MappingPlan {
    pub fn crossbars_weights_per_ce(&self) -> u64 {
        self.crossbars_weights_per_layer.iter().sum()
    }

    pub fn tiles_per_ce(&self) -> u64 {
        self.tiles_adjacency_per_ce + self.tiles_weights_per_ce
    }
}

pub fn map_gcn(dims: &GcnDims, k: u64, hw: &HardwareConfig) -> Result<MappingPlan, MapError> {
    hw.validate()?;
    if dims.num_layers() == 0 {
        return Err(MapError::NoLayers);
    }
    let n = dims.num_nodes;
    if k == 0 || k > n {
        return Err(MapError::KOutOfRange { k, nodes: n });
    }
    let slice_cols = n.div_ceil(k);
    let xb_adj = crossbars_for_matrix(n, slice_cols, hw.adjacency_bits, hw);
    let xb_w: Vec<u64> = dims
        .feature_dims
        .windows(2)
        .map(|w| crossbars_for_matrix(w[0], w[1], hw.weight_bits, hw))
        .collect();
    let pes = u64::from(hw.pes_per_tile);
    let tiles_adj = xb_adj.div_ceil(pes);
    let tiles_w = xb_w.iter().sum::<u64>().div_ceil(pes);
    let total_tiles = k * (tiles_adj + tiles_w);
    let tiles_per_chip = u64::from(hw.tiles_per_ce) * u64::from(hw.ces_per_chip);
    let chips_required = total_tiles.div_ceil(tiles_per_chip).max(1);
    let total_crossbars = k * (xb_adj + xb_w.iter().sum::<u64>());
    let capacity_crossbars = chips_required * hw.chip_capacity_crossbars();
    Ok(MappingPlan {
        k,
        num_nodes: n,
        adjacency_slice_rows: n,
        adjacency_slice_cols: slice_cols,
        crossbars_adjacency_per_ce: xb_adj,
        crossbars_weights_per_layer: xb_w,
        tiles_adjacency_per_ce: tiles_adj,
        tiles_weights_per_ce: tiles_w,
        total_tiles,
        total_crossbars,
        chips_required,
        memory_bytes_used: memory_footprint(total_crossbars, hw),
        chip_capacity_bytes: hw.chip_capacity_bytes(),
        utilization: total_crossbars as f64 / capacity_crossbars as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::preset;
    use proptest::prelude::*;

    #[test]
    fn crossbar_counts() {
        let hw = HardwareConfig::default();
        assert_eq!(crossbars_for_matrix(1433, 16, 4, &hw), 12);
        assert_eq!(crossbars_for_matrix(1, 1, 2, &hw), 1);
        assert_eq!(crossbars_for_matrix(128, 64, 2, &hw), 1);
        assert_eq!(crossbars_for_matrix(129, 64, 2, &hw), 2);
        assert_eq!(crossbars_for_matrix(128, 65, 4, &hw), 2);
    }

    #[test]
    fn full_chip_is_thirty_mebibytes() {
        let hw = HardwareConfig::default();
        assert_eq!(hw.chip_capacity_bytes(), 31_457_280);
        assert_eq!(hw.chip_capacity_bytes(), 30 * 1024 * 1024);
    }

    #[test]
    fn footprint_basics() {
        let hw = HardwareConfig::default();
        assert_eq!(memory_footprint(1, &hw), 4096);
        assert_eq!(memory_footprint(0, &hw), 0);
    }

    #[test]
    fn cora_weights_fit_one_tile() {
        let hw = HardwareConfig::default();
        let plan = map_gcn(&preset("cora").unwrap().dims(), 16, &hw).unwrap();
        assert_eq!(plan.crossbars_weights_per_layer, vec![12, 1]);
        assert_eq!(plan.tiles_weights_per_ce, 1);
        assert_eq!(plan.adjacency_slice_cols, 170);
        assert_eq!(plan.crossbars_adjacency_per_ce, 22 * 2);
    }

    #[test]
    fn small_presets_fit_one_chip() {
        let hw = HardwareConfig::default();
        for name in ["cora", "citeseer"] {
            let plan = map_gcn(&preset(name).unwrap().dims(), 16, &hw).unwrap();
            assert_eq!(plan.chips_required, 1, "{name}");
            assert!(plan.utilization > 0.0 && plan.utilization <= 1.0);
        }
    }

    #[test]
    fn rejects_bad_k_and_hardware() {
        let dims = preset("cora").unwrap().dims();
        let hw = HardwareConfig::default();
        assert!(matches!(map_gcn(&dims, 0, &hw), Err(MapError::KOutOfRange { .. })));
        assert!(matches!(map_gcn(&dims, 2709, &hw), Err(MapError::KOutOfRange { .. })));
        let odd = HardwareConfig { crossbar_dim: 100, ..HardwareConfig::default() };
        assert!(matches!(map_gcn(&dims, 16, &odd), Err(MapError::InvalidHardware(_))));
        let cells = HardwareConfig { cell_bits: 8, ..HardwareConfig::default() };
        assert!(matches!(map_gcn(&dims, 16, &cells), Err(MapError::InvalidHardware(_))));
    }

    proptest! {
        #[test]
        fn monotone_in_shape(rows in 1u64..5000, cols in 1u64..5000, bits in 1u32..9) {
            let hw = HardwareConfig::default();
            let base = crossbars_for_matrix(rows, cols, bits, &hw);
            prop_assert!(crossbars_for_matrix(rows + 1, cols, bits, &hw) >= base);
            prop_assert!(crossbars_for_matrix(rows, cols + 1, bits, &hw) >= base);
            prop_assert!(crossbars_for_matrix(rows, cols, bits + 1, &hw) >= base);
            let big = HardwareConfig { crossbar_dim: 256, ..HardwareConfig::default() };
            prop_assert!(crossbars_for_matrix(rows, cols, bits, &big) <= base);
            let dense = HardwareConfig { cell_bits: 4, weight_bits: 8, ..HardwareConfig::default() };
            prop_assert!(crossbars_for_matrix(rows, cols, bits, &dense) <= base);
        }

        #[test]
        fn exact_multiples_have_no_padding(r in 1u64..20, c in 1u64..20) {
            let hw = HardwareConfig::default();
            // 2-bit values occupy exactly one 2-bit cell.
            prop_assert_eq!(crossbars_for_matrix(128 * r, 128 * c, 2, &hw), r * c);
        }

        #[test]
        fn slices_cover_all_nodes(n in 1u64..100_000, k_raw in 1u64..1000) {
            let k = 1 + (k_raw - 1) % n;
            let cols = n.div_ceil(k);
            prop_assert!(cols * k >= n);
            prop_assert!(cols * k - n < k);
        }

        #[test]
        fn chip_count_is_tight(n in 200u64..40_000, k_raw in 1u64..64, f in 1u64..5000) {
            let hw = HardwareConfig::default();
            let k = 1 + (k_raw - 1) % n;
            let dims = GcnDims { num_nodes: n, feature_dims: vec![f, 16, 7] };
            let plan = map_gcn(&dims, k, &hw).unwrap();
            let per_chip = u64::from(hw.tiles_per_ce * hw.ces_per_chip);
            prop_assert!(plan.chips_required * per_chip >= plan.total_tiles);
            prop_assert!((plan.chips_required - 1) * per_chip < plan.total_tiles);
            prop_assert!(plan.utilization > 0.0 && plan.utilization <= 1.0);
        }
    }
}
