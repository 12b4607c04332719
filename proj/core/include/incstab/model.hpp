#pragma once

#include <optional>
#include <string>
#include <vector>

#include "incstab/expr.hpp"
#include "incstab/matrix.hpp"

namespace incstab {

enum class Topology { single, cascade, feedback };
enum class ModeTag { pos, neg };

/// Which Jacobian block of a mode: with respect to the system's own states
/// or the partner system's states.
enum class Block { own, other };

Topology parse_topology(const std::string& s);
std::string topology_name(Topology t);
std::string mode_name(ModeTag m);

/// Full state of an interconnection at one instant: one value per declared
/// state (in declaration order across systems) plus the time.
struct StatePoint {
    std::vector<double> x;
    double t = 0.0;
};

/// Closed interval; region boxes are one interval per state.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// One smooth mode of a switched system: one field expression per state.
struct Mode {
    std::vector<Expr> field;
};

/// Bimodal switched system: two smooth modes separated by the switching
/// surface H = 0. mode_pos is active on {H > 0}, mode_neg on {H < 0}; ties
/// at H = 0 keep the previously active mode (pos when there is no history).
struct SwitchedSystem {
    std::vector<std::string> states;
    Expr manifold;
    Mode mode_pos;
    Mode mode_neg;
    std::vector<int> slots;  // positions of the own states in the full state vector

    [[nodiscard]] int dim() const { return static_cast<int>(states.size()); }
};

/// One or two switched systems plus the coupling topology and the analysis
/// region. Immutable after loading; all queries are const and thread-safe.
///
/// Whether the region box is actually forward invariant is the caller's
/// assertion; certification reports conditions over the box as given.
class Interconnection {
public:
    std::string name;
    Topology topology = Topology::single;
    std::vector<SwitchedSystem> systems;
    std::vector<std::string> state_names;  // declaration order across systems
    std::vector<Interval> region;          // aligned with state_names

    [[nodiscard]] int dim() const { return static_cast<int>(state_names.size()); }
    [[nodiscard]] int system_count() const { return static_cast<int>(systems.size()); }
    [[nodiscard]] int find_state(const std::string& name) const;

    /// Variable order used to bind every expression: states then "t".
    [[nodiscard]] std::vector<std::string> variable_order() const;

    /// Flatten a StatePoint into the bound slot order (states..., t).
    [[nodiscard]] std::vector<double> slots(const StatePoint& p) const;

    [[nodiscard]] double manifold_value(int sys, const StatePoint& p) const;

    /// Gradient row of H with respect to the system's own states.
    [[nodiscard]] std::vector<double> manifold_gradient(int sys, const StatePoint& p) const;

    [[nodiscard]] ModeTag active_mode(int sys, const StatePoint& p,
                                      std::optional<ModeTag> previous = std::nullopt) const;

    /// Componentwise evaluation of the selected mode field. The model layer
    /// adds no arithmetic of its own.
    [[nodiscard]] std::vector<double> field_eval(int sys, ModeTag mode, const StatePoint& p) const;

    /// Jacobian block of a mode with respect to the own or partner states.
    /// Block::other is only meaningful for two-system topologies.
    [[nodiscard]] Matrix mode_jacobian(int sys, ModeTag mode, const StatePoint& p, Block wrt) const;

    /// Slots of the partner system's states (empty for single topology).
    [[nodiscard]] std::vector<int> other_slots(int sys) const;
};

/// Parse and fully validate a JSON configuration document. Schema errors,
/// topology violations, unknown variables and expression syntax errors are
/// all reported as ConfigError/ParseError with context.
Interconnection load_config(const std::string& text);

/// Inverse of load_config up to formatting: the emitted document reloads to
/// an interconnection with identical evaluations.
std::string serialize(const Interconnection& ic);

}  // namespace incstab
