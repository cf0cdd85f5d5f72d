#pragma once
// Ready-made domain templates: a service dependency tree, a spiking network,
// and a transmission ring. Each builder returns a validated sheaf, an update
// rule, a globally consistent initial section, and a scripted failure drill
// whose outcome is pinned by tests.

#include <cstdint>

#include "rcause/dynamics.hpp"
#include "rcause/model.hpp"

namespace rcause {

struct DomainModel {
    Sheaf sheaf;
    UpdateRule rule;
    Section initial;
    ScenarioConfig scripted;  // canonical failure drill for the template
};

// Service dependency tree with `services` nodes ("s0".."sN"), each non-root
// depending on its parent under the given branching factor. Node states are
// health x load ("healthy@l0"); edges carry the offered service level
// (normal/reduced/none), which both endpoints' health must match. A node goes
// down when a strict majority of its dependencies offer nothing, degrades
// when any is impaired, and is healthy otherwise; roots hold their state.
// Scripted drill: the root goes down for good.
DomainModel build_microservice(std::size_t services = 3, std::size_t branching = 1,
                               std::size_t load_levels = 1);

// Spiking network: binary nodes ("n0"..), edges carry none/signal with
// identity restriction on both sides, so consistency means source and target
// agree. A node fires when at least `threshold` incoming edges carry signal;
// nodes without inputs go quiet. Each ordered pair gets an edge with
// probability connect_prob (1 = complete digraph). Scripted drill: n0 is
// lesioned to quiet.
DomainModel build_neural(std::size_t neurons = 4, double connect_prob = 1.0,
                         std::size_t threshold = 1, std::uint64_t seed = 0);

// Transmission ring alternating generators and loads ("g0", "l1", ...);
// `stations` must be even and positive. Node states are injection levels
// -levels..+levels; directed ring edges carry flow 0..cap with the tail
// pushing clamp(injection, 0, cap) and the head drawing clamp(-injection, 0,
// cap). A load sheds one level toward zero whenever its inflow is below its
// demand; other nodes hold state. Scripted drill: the line out of g0 is cut.
DomainModel build_powergrid(std::size_t stations = 4, std::size_t levels = 1,
                            std::size_t cap = 1);

}  // namespace rcause
