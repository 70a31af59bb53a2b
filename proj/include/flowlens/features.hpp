#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flowlens/bitmatrix.hpp"
#include "flowlens/csv.hpp"
#include "flowlens/errors.hpp"
#include "flowlens/eventlog.hpp"

namespace flowlens {

/// Per-case occurrence profile over the alphabet: 0 = absent, 1 = exactly
/// once, 2 = two or more.
using ActivityProfile = std::vector<std::uint8_t>;

/// Transition endpoints are alphabet indices; the synthetic process
/// boundary endpoints use the sentinels below.
constexpr std::int32_t kStartEndpoint = -1;
constexpr std::int32_t kEndEndpoint = -2;

using Transition = std::pair<std::int32_t, std::int32_t>;

/// Per-case set of directly-follows transitions (presence only), including
/// START->first and last->END. Sorted, unique.
struct TransitionProfile {
    std::vector<Transition> present;
};

using LabelIndex = std::unordered_map<std::string, std::int32_t>;

inline LabelIndex build_label_index(const std::vector<std::string>& alphabet) {
    LabelIndex index;
    index.reserve(alphabet.size());
    for (std::size_t i = 0; i < alphabet.size(); ++i)
        index.emplace(alphabet[i], static_cast<std::int32_t>(i));
    return index;
}

inline const std::string& endpoint_name(std::int32_t endpoint,
                                        const std::vector<std::string>& alphabet) {
    static const std::string start_name = "START";
    static const std::string end_name = "END";
    if (endpoint == kStartEndpoint)
        return start_name;
    if (endpoint == kEndEndpoint)
        return end_name;
    return alphabet[static_cast<std::size_t>(endpoint)];
}

inline ActivityProfile activity_profile(const Case& c, const LabelIndex& index) {
    ActivityProfile profile(index.size(), 0);
    for (const auto& e : c.events) {
        const auto it = index.find(e.activity);
        if (it == index.end())
            throw AnalysisError("activity '" + e.activity + "' of case '" + c.id +
                                "' is not in the alphabet");
        auto& v = profile[static_cast<std::size_t>(it->second)];
        if (v < 2)
            ++v;
    }
    return profile;
}

inline ActivityProfile activity_profile(const Case& c, const std::vector<std::string>& alphabet) {
    return activity_profile(c, build_label_index(alphabet));
}

inline TransitionProfile transition_profile(const Case& c, const LabelIndex& index) {
    if (c.events.empty())
        throw AnalysisError("cannot build a transition profile for empty case '" + c.id + "'");
    auto lookup = [&](const std::string& label) {
        const auto it = index.find(label);
        if (it == index.end())
            throw AnalysisError("activity '" + label + "' of case '" + c.id +
                                "' is not in the alphabet");
        return it->second;
    };
    std::set<Transition> seen;
    std::int32_t prev = kStartEndpoint;
    for (const auto& e : c.events) {
        const std::int32_t cur = lookup(e.activity);
        seen.emplace(prev, cur);
        prev = cur;
    }
    seen.emplace(prev, kEndEndpoint);
    TransitionProfile profile;
    profile.present.assign(seen.begin(), seen.end());
    return profile;
}

inline TransitionProfile transition_profile(const Case& c, const std::vector<std::string>& alphabet) {
    return transition_profile(c, build_label_index(alphabet));
}

struct ProfileSelection {
    bool activity = true;
    bool transition = true;
};

struct ColumnDesc {
    enum class Kind { ActivityGe1, ActivityGe2, Transition };
    Kind kind;
    std::int32_t a; // activity index, or transition source endpoint
    std::int32_t b; // transition target endpoint; unused for activity columns

    friend bool operator==(const ColumnDesc&, const ColumnDesc&) = default;
};

/// One-hot matrix over cases: thermometer bits [v>=1],[v>=2] per activity,
/// one presence bit per transition observed anywhere in the log.
struct FeatureMatrix {
    BitMatrix bits;
    std::vector<ColumnDesc> columns;
    std::vector<std::string> case_ids;
    std::vector<std::string> alphabet;
    std::size_t activity_column_count = 0; // leading columns; 2*|alphabet| if selected

    std::size_t row_count() const noexcept { return bits.rows(); }
    std::size_t column_count() const noexcept { return bits.cols(); }

    std::string column_descriptor(std::size_t i) const {
        const ColumnDesc& col = columns[i];
        switch (col.kind) {
        case ColumnDesc::Kind::ActivityGe1:
            return "act:" + alphabet[static_cast<std::size_t>(col.a)] + ":ge1";
        case ColumnDesc::Kind::ActivityGe2:
            return "act:" + alphabet[static_cast<std::size_t>(col.a)] + ":ge2";
        case ColumnDesc::Kind::Transition:
            return "tr:" + endpoint_name(col.a, alphabet) + "→" + endpoint_name(col.b, alphabet);
        }
        return {};
    }

    /// Binds downstream artifacts (clustering suites, reports) to the
    /// matrix they were computed from.
    std::uint64_t fingerprint() const {
        std::uint64_t h = detail::fnv1a_u64(bits.rows(), 0xcbf29ce484222325ULL);
        h = detail::fnv1a_u64(bits.cols(), h);
        for (const auto& col : columns) {
            h = detail::fnv1a_u64(static_cast<std::uint64_t>(col.kind), h);
            h = detail::fnv1a_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(col.a)), h);
            h = detail::fnv1a_u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(col.b)), h);
        }
        for (const auto& id : case_ids)
            h = detail::fnv1a(id.data(), id.size(), h);
        for (const auto& label : alphabet)
            h = detail::fnv1a(label.data(), label.size(), h);
        const auto raw = bits.raw();
        h = detail::fnv1a(raw.data(), raw.size() * sizeof(std::uint64_t), h);
        return h;
    }
};

/// Encodes per-case profiles into the binary feature matrix. Only
/// transitions observed somewhere in the log become columns; columns are
/// ordered deterministically (activities in alphabet order, transitions
/// lexicographically by endpoint names).
inline FeatureMatrix encode(const EventLog& log, ProfileSelection selection = {}) {
    if (!selection.activity && !selection.transition)
        throw ConfigError("at least one profile (activity, transition) must be selected");

    const auto& alphabet = log.activity_alphabet();
    const LabelIndex index = build_label_index(alphabet);
    const std::size_t n = log.case_count();

    std::vector<ActivityProfile> activity_profiles;
    std::vector<TransitionProfile> transition_profiles;
    std::set<Transition> observed;
    if (selection.activity)
        activity_profiles.reserve(n);
    if (selection.transition)
        transition_profiles.reserve(n);
    for (const auto& c : log.cases()) {
        if (selection.activity)
            activity_profiles.push_back(activity_profile(c, index));
        if (selection.transition) {
            transition_profiles.push_back(transition_profile(c, index));
            observed.insert(transition_profiles.back().present.begin(),
                            transition_profiles.back().present.end());
        }
    }

    std::vector<Transition> transitions(observed.begin(), observed.end());
    std::sort(transitions.begin(), transitions.end(), [&](const Transition& x, const Transition& y) {
        const std::string& xf = endpoint_name(x.first, alphabet);
        const std::string& yf = endpoint_name(y.first, alphabet);
        if (xf != yf)
            return xf < yf;
        return endpoint_name(x.second, alphabet) < endpoint_name(y.second, alphabet);
    });

    FeatureMatrix matrix;
    matrix.alphabet = alphabet;
    if (selection.activity) {
        for (std::size_t a = 0; a < alphabet.size(); ++a) {
            matrix.columns.push_back({ColumnDesc::Kind::ActivityGe1, static_cast<std::int32_t>(a), 0});
            matrix.columns.push_back({ColumnDesc::Kind::ActivityGe2, static_cast<std::int32_t>(a), 0});
        }
        matrix.activity_column_count = matrix.columns.size();
    }
    std::unordered_map<std::uint64_t, std::size_t> transition_column;
    transition_column.reserve(transitions.size());
    auto transition_key = [](const Transition& t) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.first)) << 32) |
               static_cast<std::uint32_t>(t.second);
    };
    if (selection.transition) {
        for (const Transition& t : transitions) {
            transition_column.emplace(transition_key(t), matrix.columns.size());
            matrix.columns.push_back({ColumnDesc::Kind::Transition, t.first, t.second});
        }
    }

    matrix.bits = BitMatrix(n, matrix.columns.size());
    matrix.case_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        matrix.case_ids.push_back(log.cases()[i].id);
        if (selection.activity) {
            const ActivityProfile& profile = activity_profiles[i];
            for (std::size_t a = 0; a < profile.size(); ++a) {
                if (profile[a] >= 1)
                    matrix.bits.set(i, 2 * a, true);
                if (profile[a] >= 2)
                    matrix.bits.set(i, 2 * a + 1, true);
            }
        }
        if (selection.transition) {
            for (const Transition& t : transition_profiles[i].present)
                matrix.bits.set(i, transition_column.at(transition_key(t)), true);
        }
    }
    return matrix;
}

/// Inverse of the thermometer encoding for one row.
inline ActivityProfile decode_activity_profile(const FeatureMatrix& matrix, std::size_t row) {
    if (matrix.activity_column_count == 0)
        throw AnalysisError("matrix was encoded without the activity profile");
    const std::size_t a_count = matrix.activity_column_count / 2;
    ActivityProfile profile(a_count, 0);
    for (std::size_t a = 0; a < a_count; ++a) {
        const bool ge1 = matrix.bits.get(row, 2 * a);
        const bool ge2 = matrix.bits.get(row, 2 * a + 1);
        profile[a] = ge2 ? 2 : (ge1 ? 1 : 0);
    }
    return profile;
}

/// Transition set present in one encoded row (sorted by endpoint indices).
inline std::vector<Transition> decode_transitions(const FeatureMatrix& matrix, std::size_t row) {
    std::vector<Transition> present;
    for (std::size_t i = matrix.activity_column_count; i < matrix.columns.size(); ++i)
        if (matrix.bits.get(row, i))
            present.emplace_back(matrix.columns[i].a, matrix.columns[i].b);
    std::sort(present.begin(), present.end());
    return present;
}

/// Matrix dump: header of column descriptors, one 0/1 row per case id.
inline void write_matrix_csv(const FeatureMatrix& matrix, std::ostream& out) {
    std::vector<std::string> header;
    header.reserve(matrix.columns.size() + 1);
    header.push_back("case_id");
    for (std::size_t i = 0; i < matrix.columns.size(); ++i)
        header.push_back(matrix.column_descriptor(i));
    detail::write_csv_row(out, header);
    std::vector<std::string> row;
    for (std::size_t r = 0; r < matrix.row_count(); ++r) {
        row.clear();
        row.push_back(matrix.case_ids[r]);
        for (std::size_t c = 0; c < matrix.column_count(); ++c)
            row.push_back(matrix.bits.get(r, c) ? "1" : "0");
        detail::write_csv_row(out, row);
    }
}

} // namespace flowlens
