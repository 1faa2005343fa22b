//! Configurations bundled into the binary.

const PRESETS: &[(&str, &str)] = &[
    ("centred_triangle_equilibria", include_str!("../../../presets/centred_triangle_equilibria.json")),
    ("centred_triangle_sweep", include_str!("../../../presets/centred_triangle_sweep.json")),
    ("dipole", include_str!("../../../presets/dipole.json")),
    ("pair_a_stable", include_str!("../../../presets/pair_a_stable.json")),
    ("pair_a_sweep", include_str!("../../../presets/pair_a_sweep.json")),
    ("pair_a_unstable", include_str!("../../../presets/pair_a_unstable.json")),
    ("pair_b_sweep", include_str!("../../../presets/pair_b_sweep.json")),
    ("pair_curve_dipole", include_str!("../../../presets/pair_curve_dipole.json")),
    ("pair_curve_same_sign", include_str!("../../../presets/pair_curve_same_sign.json")),
    ("pair_same_sign", include_str!("../../../presets/pair_same_sign.json")),
    ("perturbed_triangle", include_str!("../../../presets/perturbed_triangle.json")),
    ("quadruple", include_str!("../../../presets/quadruple.json")),
    ("single_vortex", include_str!("../../../presets/single_vortex.json")),
    ("triangle_equilibria", include_str!("../../../presets/triangle_equilibria.json")),
    ("triangle_sweep", include_str!("../../../presets/triangle_sweep.json")),
    ("triple_equal", include_str!("../../../presets/triple_equal.json")),
    ("tripole", include_str!("../../../presets/tripole.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
