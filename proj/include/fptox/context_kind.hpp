#pragma once

#include <string>

#include "fptox/error.hpp"

namespace fptox::context {

// Contextual modifiers a mention can carry.
enum class ContextKind {
    negated,
    uncertain,
    historical,
    family_experiencer,
};

inline const char* to_string(ContextKind k) {
    switch (k) {
        case ContextKind::negated: return "negated";
        case ContextKind::uncertain: return "uncertain";
        case ContextKind::historical: return "historical";
        case ContextKind::family_experiencer: return "family_experiencer";
    }
    return "?";
}

inline ContextKind context_kind_from_string(const std::string& s) {
    if (s == "negated") return ContextKind::negated;
    if (s == "uncertain") return ContextKind::uncertain;
    if (s == "historical") return ContextKind::historical;
    if (s == "family_experiencer") return ContextKind::family_experiencer;
    throw Error("unknown context kind: '" + s + "'");
}

}  // namespace fptox::context
