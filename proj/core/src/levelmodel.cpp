#include "shbkit/levelmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shbkit {

namespace {

void check_rate(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
        throw ValidationError(std::string("hyperfine model: ") + name +
                              " must be finite and non-negative");
}

// Coincident features of the same class and sign merge into one; distinct
// classes stay separate even when degenerate (e.g. at B = 0) so each keeps
// its own decay lifetime.
constexpr double kMergeTolHz = 1e-6;

void add_feature(std::vector<PatternFeature>& features, double detuning, FeatureClass cls,
                 int sign, double weight) {
    for (auto& f : features) {
        if (f.cls == cls && f.sign == sign && std::fabs(f.detuning_hz - detuning) <= kMergeTolHz) {
            f.weight += weight;
            return;
        }
    }
    features.push_back({detuning, cls, sign, weight});
}

}  // namespace

void HyperfineModel::validate() const {
    check_rate(rate_y1_hz_per_t, "rate_y1");
    check_rate(rate_x1_hz_per_t, "rate_x1");
    check_rate(shf_diff_y1_hz_per_t, "shf_diff_y1");
    check_rate(shf_diff_x1_hz_per_t, "shf_diff_x1");
}

std::vector<LevelState> enumerate_levels(const HyperfineModel& model, double field_t) {
    model.validate();
    if (field_t < 0.0) throw ValidationError("enumerate_levels: field must be non-negative");

    std::vector<LevelState> levels;
    levels.reserve(8);
    const struct {
        Doublet doublet;
        double hf_split;
        double shf_diff;
    } doublets[] = {
        {Doublet::Y1, model.rate_y1_hz_per_t * field_t, model.shf_diff_y1_hz_per_t * field_t},
        {Doublet::X1, model.rate_x1_hz_per_t * field_t, model.shf_diff_x1_hz_per_t * field_t},
    };
    for (const auto& d : doublets) {
        for (Spin hf : {Spin::Down, Spin::Up}) {
            const double hf_offset = (hf == Spin::Down ? -0.5 : 0.5) * d.hf_split;
            // d(down) = 0, d(up) = shf_diff * B: only the difference is observable.
            const double sub_split = (hf == Spin::Up) ? d.shf_diff : 0.0;
            for (Spin lattice : {Spin::Down, Spin::Up}) {
                const double sub = (lattice == Spin::Down ? -0.5 : 0.5) * sub_split;
                levels.push_back({d.doublet, hf, lattice, hf_offset + sub});
            }
        }
    }
    return levels;
}

std::vector<TransitionLine> enumerate_transitions(std::span<const LevelState> levels,
                                                  const HyperfineModel& model) {
    std::vector<const LevelState*> lower, upper;
    for (const auto& s : levels)
        (s.doublet == Doublet::Y1 ? lower : upper).push_back(&s);
    if (lower.size() != 4 || upper.size() != 4)
        throw ValidationError("enumerate_transitions: expected 4 Y1 and 4 X1 states");

    std::vector<TransitionLine> lines;
    lines.reserve(16);
    for (const auto* lo : lower)
        for (const auto* up : upper) {
            const bool allowed = model.selection_rule == SelectionRule::SpinFree ||
                                 lo->lattice_spin == up->lattice_spin;
            lines.push_back({*lo, *up, up->energy_offset_hz - lo->energy_offset_hz, allowed});
        }
    return lines;
}

HolePattern predict_hole_pattern(const HyperfineModel& model, double field_t,
                                 bool include_antiholes) {
    model.validate();
    if (field_t < 0.0) throw ValidationError("predict_hole_pattern: field must be non-negative");

    const double dl = model.rate_y1_hz_per_t * field_t;
    const double dh = model.rate_x1_hz_per_t * field_t;
    const double sl = model.shf_diff_y1_hz_per_t * field_t;
    const double sh = model.shf_diff_x1_hz_per_t * field_t;

    HolePattern pattern;
    pattern.field_t = field_t;
    auto& f = pattern.features;

    // Every burn scenario depletes the burn frequency itself.
    add_feature(f, 0.0, FeatureClass::Central, +1, 1.0);

    // Side holes: the lattice-spin-down sub-ensemble produces members at
    // +-(D - s/2), the spin-up one at +-(D + s/2).
    for (double side : {-1.0, 1.0}) {
        add_feature(f, side * (dl - sl / 2.0), FeatureClass::InnerCluster, +1, 0.25);
        add_feature(f, side * (dl + sl / 2.0), FeatureClass::InnerCluster, +1, 0.25);
        add_feature(f, side * (dh - sh / 2.0), FeatureClass::OuterCluster, +1, 0.25);
        add_feature(f, side * (dh + sh / 2.0), FeatureClass::OuterCluster, +1, 0.25);
    }

    if (model.selection_rule == SelectionRule::SpinFree) {
        // Lattice-spin flips put superhyperfine satellites on the central
        // hole, which the measured spectra rule out.
        for (double side : {-1.0, 1.0}) {
            if (sl > 0.0) add_feature(f, side * sl, FeatureClass::Central, +1, 0.25);
            if (sh > 0.0) add_feature(f, side * sh, FeatureClass::Central, +1, 0.25);
        }
        pattern.spin_free_satellites = sl > 0.0 || sh > 0.0;
    }

    if (include_antiholes) {
        for (double side : {-1.0, 1.0}) {
            add_feature(f, side * dl, FeatureClass::AntiHole, -1, 0.25);
            add_feature(f, side * (dh - dl), FeatureClass::AntiHole, -1, 0.25);
        }
    }

    std::sort(f.begin(), f.end(), [](const PatternFeature& a, const PatternFeature& b) {
        if (a.detuning_hz != b.detuning_hz) return a.detuning_hz < b.detuning_hz;
        return a.sign > b.sign;
    });
    return pattern;
}

}  // namespace shbkit
