#pragma once

#include <stdexcept>
#include <string>

namespace nashflow {

enum class Errc {
    zero_cycle,
    unreachable,
    non_positive_capacity,
    negative_transit,
    duplicate_arc,
    invalid_input,
    parse_error,
    no_solution,
    search_exhausted,
    budget_exceeded,
    singular_system,
    infeasible_labeling,
    non_positive_event,
    phase_cap_exceeded,
    division_by_zero_rate,
    primal_infeasible,
    duality_gap,
    feasibility_violation,
    equivalence_broken,
    theorem_violated,
    not_in_local_feasible_set,
    switch_time_unreachable,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::zero_cycle: return "ZeroCycle";
        case Errc::unreachable: return "Unreachable";
        case Errc::non_positive_capacity: return "NonPositiveCapacity";
        case Errc::negative_transit: return "NegativeTransit";
        case Errc::duplicate_arc: return "DuplicateArc";
        case Errc::invalid_input: return "InvalidInput";
        case Errc::parse_error: return "ParseError";
        case Errc::no_solution: return "NoSolution";
        case Errc::search_exhausted: return "SearchExhausted";
        case Errc::budget_exceeded: return "BudgetExceeded";
        case Errc::singular_system: return "SingularSystem";
        case Errc::infeasible_labeling: return "InfeasibleLabeling";
        case Errc::non_positive_event: return "NonPositiveEvent";
        case Errc::phase_cap_exceeded: return "PhaseCapExceeded";
        case Errc::division_by_zero_rate: return "DivisionByZeroRate";
        case Errc::primal_infeasible: return "PrimalInfeasible";
        case Errc::duality_gap: return "DualityGap";
        case Errc::feasibility_violation: return "FeasibilityViolation";
        case Errc::equivalence_broken: return "EquivalenceBroken";
        case Errc::theorem_violated: return "TheoremViolated";
        case Errc::not_in_local_feasible_set: return "NotInLocalFeasibleSet";
        case Errc::switch_time_unreachable: return "SwitchTimeUnreachable";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, Errc code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace nashflow
