#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "flowlens/clustering.hpp"
#include "flowlens/errors.hpp"
#include "flowlens/eventlog.hpp"

namespace flowlens {

/// Reserved value for cases missing an attribute (or carrying an empty
/// string). It forms a real business area and always counts toward n(C).
inline const std::string kEmptyValueToken = "(empty)";

enum class LiftRule { First, Last, DistinctConcat };

inline const char* lift_rule_name(LiftRule rule) {
    switch (rule) {
    case LiftRule::First: return "first";
    case LiftRule::Last: return "last";
    case LiftRule::DistinctConcat: return "distinct-concat";
    }
    return "";
}

/// Lifts an event attribute to case level: the value of the first/last
/// carrying event, or the comma-separated list of distinct values in
/// occurrence order. Optionally restricted to events of one activity.
struct DimensionLift {
    std::string attribute;
    LiftRule rule = LiftRule::First;
    std::optional<std::string> activity;

    std::string dimension_name() const {
        return (activity ? *activity : std::string("event")) + "." + attribute + "." +
               lift_rule_name(rule);
    }
};

struct DimensionSpec {
    bool all_case_attributes = true;
    std::vector<std::string> case_attributes; // explicit selection when !all_case_attributes
    std::vector<std::string> exclude;
    std::vector<DimensionLift> lifted;
    bool include_empty_in_ranking = true;
};

/// Case-level dimension values: values[d][i] is the canonical value of
/// dimension d for case i. This is the input of all influence measures.
struct DimensionTable {
    std::vector<std::string> case_ids;
    std::vector<std::string> dimensions;
    std::vector<std::vector<std::string>> values;
};

inline DimensionTable derive_dimensions(const EventLog& log, const DimensionSpec& spec = {}) {
    DimensionTable table;
    table.case_ids.reserve(log.case_count());
    for (const auto& c : log.cases())
        table.case_ids.push_back(c.id);

    std::set<std::string> selected;
    if (spec.all_case_attributes) {
        for (const auto& c : log.cases())
            for (const auto& [name, value] : c.attributes)
                selected.insert(name);
    } else {
        std::set<std::string> known;
        for (const auto& c : log.cases())
            for (const auto& [name, value] : c.attributes)
                known.insert(name);
        for (const auto& name : spec.case_attributes) {
            if (!known.count(name))
                throw ConfigError("case attribute '" + name + "' does not occur in the log");
            selected.insert(name);
        }
    }
    for (const auto& name : spec.exclude)
        selected.erase(name);

    for (const auto& name : selected) {
        std::vector<std::string> column;
        column.reserve(log.case_count());
        for (const auto& c : log.cases()) {
            auto it = c.attributes.find(name);
            if (it == c.attributes.end() || it->second.canonical().empty())
                column.push_back(kEmptyValueToken);
            else
                column.push_back(it->second.canonical());
        }
        table.dimensions.push_back(name);
        table.values.push_back(std::move(column));
    }

    for (const auto& lift : spec.lifted) {
        bool attribute_seen = false;
        std::vector<std::string> column;
        column.reserve(log.case_count());
        for (const auto& c : log.cases()) {
            std::vector<std::string> found;
            for (const auto& e : c.events) {
                if (lift.activity && e.activity != *lift.activity)
                    continue;
                auto it = e.attributes.find(lift.attribute);
                if (it == e.attributes.end())
                    continue;
                attribute_seen = true;
                found.push_back(it->second.canonical());
            }
            std::string value;
            switch (lift.rule) {
            case LiftRule::First:
                if (!found.empty())
                    value = found.front();
                break;
            case LiftRule::Last:
                if (!found.empty())
                    value = found.back();
                break;
            case LiftRule::DistinctConcat: {
                std::set<std::string> used;
                for (const auto& v : found) {
                    if (used.insert(v).second) {
                        if (!value.empty())
                            value += ",";
                        value += v;
                    }
                }
                break;
            }
            }
            column.push_back(value.empty() ? kEmptyValueToken : value);
        }
        if (!attribute_seen)
            throw ConfigError("lifted event attribute '" + lift.attribute + "' does not occur" +
                              (lift.activity ? " on activity '" + *lift.activity + "'" : "") +
                              " in the log");
        table.dimensions.push_back(lift.dimension_name());
        table.values.push_back(std::move(column));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Interestingness measures. All densities and contributions are computed
// from exact integer counts with a single final division.
// ---------------------------------------------------------------------------

/// Density: fraction of a case set belonging to a business area.
inline double density(std::uint64_t members_in_set, std::uint64_t set_size) {
    if (set_size == 0)
        throw AnalysisError("density over an empty case set");
    return static_cast<double>(members_in_set) / static_cast<double>(set_size);
}

/// Contribution: cluster density minus overall density,
/// (in_cluster/cluster_size) - (in_all/total), evaluated as one quotient.
inline double contribution(std::uint64_t in_cluster, std::uint64_t cluster_size,
                           std::uint64_t in_all, std::uint64_t total) {
    if (cluster_size == 0 || total == 0)
        throw AnalysisError("contribution over an empty case set");
    const double numer = static_cast<double>(in_cluster) * static_cast<double>(total) -
                         static_cast<double>(in_all) * static_cast<double>(cluster_size);
    return numer / (static_cast<double>(cluster_size) * static_cast<double>(total));
}

struct ClusterCount {
    std::uint64_t in_cluster = 0;
    std::uint64_t cluster_size = 0;
};

/// Cluster-size-weighted sum of squared positive contributions over every
/// cluster handed in (all clusters of all runs; no per-run normalization).
inline double business_area_contribution(std::span<const ClusterCount> clusters,
                                         std::uint64_t area_members, std::uint64_t total) {
    double sum = 0.0;
    for (const ClusterCount& c : clusters) {
        const double contrib = contribution(c.in_cluster, c.cluster_size, area_members, total);
        if (contrib > 0.0) {
            const double weight = static_cast<double>(c.cluster_size) / static_cast<double>(total);
            sum += weight * contrib * contrib;
        }
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Influence analysis over a set of partitions.
// ---------------------------------------------------------------------------

/// One clustering viewed as a partition of the case set. Influence
/// analysis needs nothing else from the clustering, which keeps it usable
/// with synthetic partitions as well.
struct Partition {
    std::string label;
    std::uint32_t k = 0;
    std::vector<std::uint32_t> assignments;
    std::vector<std::uint64_t> sizes;
};

inline Partition partition_from_model(const ClusterModel& model) {
    return Partition{"k=" + std::to_string(model.k), model.k, model.assignments, model.sizes};
}

inline std::vector<Partition> partitions_from_suite(const ClusteringSuite& suite) {
    std::vector<Partition> partitions;
    partitions.reserve(suite.models.size());
    for (const auto& model : suite.models)
        partitions.push_back(partition_from_model(model));
    return partitions;
}

struct BusinessArea {
    std::string dimension;
    std::string value;
    std::uint64_t member_count = 0;
};

struct AreaContributionRow {
    BusinessArea area;
    double business_area_contribution = 0.0;
};

struct AttributeContributionRow {
    std::string attribute;
    double case_attribute_contribution = 0.0;
    std::uint64_t distinct_values = 0;
};

struct AreaClusterStat {
    std::string dimension;
    std::string value;
    double cluster_density = 0.0;
    double total_density = 0.0;
    double contribution = 0.0;
};

/// Top areas of one cluster of one partition.
struct ClusterAreaTable {
    std::size_t partition_index = 0;
    std::string partition_label;
    std::uint32_t cluster = 0;
    std::uint64_t size = 0;
    std::vector<AreaClusterStat> top;
};

/// Descending by contribution; ties ascending by (dimension, value).
inline void rank_areas(std::vector<AreaContributionRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const AreaContributionRow& a, const AreaContributionRow& b) {
        if (a.business_area_contribution != b.business_area_contribution)
            return a.business_area_contribution > b.business_area_contribution;
        if (a.area.dimension != b.area.dimension)
            return a.area.dimension < b.area.dimension;
        return a.area.value < b.area.value;
    });
}

/// Descending by contribution; ties ascending by attribute name.
inline void rank_attributes(std::vector<AttributeContributionRow>& rows) {
    std::sort(rows.begin(), rows.end(),
              [](const AttributeContributionRow& a, const AttributeContributionRow& b) {
                  if (a.case_attribute_contribution != b.case_attribute_contribution)
                      return a.case_attribute_contribution > b.case_attribute_contribution;
                  return a.attribute < b.attribute;
              });
}

struct InfluenceOptions {
    std::size_t top_per_cluster = 5;
    bool include_empty_in_ranking = true;
};

struct InfluenceResult {
    std::vector<AreaContributionRow> area_rows;          // ranked
    std::vector<AttributeContributionRow> attribute_rows; // ranked
    std::vector<ClusterAreaTable> cluster_tables;        // per partition, per cluster
    std::size_t case_count = 0;
    std::size_t dimension_count = 0;
    std::size_t area_count = 0; // including areas excluded from ranking
};

/// Computes every business area's per-cluster contributions, the
/// aggregated BusinessAreaContribution over all partitions, and the
/// per-attribute consolidation.
inline InfluenceResult analyze_influence(const DimensionTable& dims,
                                         std::span<const Partition> partitions,
                                         const InfluenceOptions& options = {}) {
    const std::size_t n = dims.case_ids.size();
    if (n == 0)
        throw AnalysisError("influence analysis requires a non-empty case set");
    for (const Partition& p : partitions) {
        if (p.assignments.size() != n)
            throw AnalysisError("partition '" + p.label + "' covers " +
                                std::to_string(p.assignments.size()) + " cases, analysis has " +
                                std::to_string(n));
        std::uint64_t covered = 0;
        for (std::uint64_t s : p.sizes)
            covered += s;
        if (p.sizes.size() != p.k || covered != n)
            throw AnalysisError("partition '" + p.label + "' sizes do not form a partition");
    }

    InfluenceResult result;
    result.case_count = n;
    result.dimension_count = dims.dimensions.size();

    // Group case indices per (dimension, value).
    struct AreaMembers {
        BusinessArea area;
        std::vector<std::uint32_t> members;
    };
    std::vector<AreaMembers> areas;
    std::vector<std::pair<std::size_t, std::size_t>> dim_area_span; // [begin, end) per dimension
    for (std::size_t d = 0; d < dims.dimensions.size(); ++d) {
        std::map<std::string, std::vector<std::uint32_t>> groups;
        for (std::size_t i = 0; i < n; ++i)
            groups[dims.values[d][i]].push_back(static_cast<std::uint32_t>(i));
        const std::size_t begin = areas.size();
        for (auto& [value, members] : groups) {
            AreaMembers am;
            am.area = BusinessArea{dims.dimensions[d], value,
                                   static_cast<std::uint64_t>(members.size())};
            am.members = std::move(members);
            areas.push_back(std::move(am));
        }
        dim_area_span.emplace_back(begin, areas.size());
    }
    result.area_count = areas.size();

    // Per-area contribution aggregation and per-cluster tables.
    std::vector<double> bac(areas.size(), 0.0);
    for (std::size_t pi = 0; pi < partitions.size(); ++pi) {
        const Partition& p = partitions[pi];
        // stats[cluster] -> candidate rows of that cluster
        std::vector<std::vector<std::pair<double, std::size_t>>> candidates(p.k);
        for (std::size_t a = 0; a < areas.size(); ++a) {
            std::vector<std::uint64_t> in_cluster(p.k, 0);
            for (const std::uint32_t row : areas[a].members)
                ++in_cluster[p.assignments[row]];
            for (std::uint32_t c = 0; c < p.k; ++c) {
                const double contrib =
                    contribution(in_cluster[c], p.sizes[c], areas[a].area.member_count, n);
                if (contrib > 0.0) {
                    const double weight = static_cast<double>(p.sizes[c]) / static_cast<double>(n);
                    bac[a] += weight * contrib * contrib;
                }
                const bool rankable =
                    options.include_empty_in_ranking || areas[a].area.value != kEmptyValueToken;
                if (rankable)
                    candidates[c].emplace_back(contrib, a);
            }
        }
        for (std::uint32_t c = 0; c < p.k; ++c) {
            auto& rows = candidates[c];
            const std::size_t take = std::min(options.top_per_cluster, rows.size());
            std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take),
                              rows.end(), [&](const auto& x, const auto& y) {
                                  if (x.first != y.first)
                                      return x.first > y.first;
                                  const auto& ax = areas[x.second].area;
                                  const auto& ay = areas[y.second].area;
                                  if (ax.dimension != ay.dimension)
                                      return ax.dimension < ay.dimension;
                                  return ax.value < ay.value;
                              });
            ClusterAreaTable table;
            table.partition_index = pi;
            table.partition_label = p.label;
            table.cluster = c;
            table.size = p.sizes[c];
            for (std::size_t i = 0; i < take; ++i) {
                const auto& [contrib, a] = rows[i];
                std::vector<std::uint64_t> in_cluster(p.k, 0);
                for (const std::uint32_t row : areas[a].members)
                    ++in_cluster[p.assignments[row]];
                AreaClusterStat stat;
                stat.dimension = areas[a].area.dimension;
                stat.value = areas[a].area.value;
                stat.cluster_density = density(in_cluster[c], p.sizes[c]);
                stat.total_density = density(areas[a].area.member_count, n);
                stat.contribution = contrib;
                table.top.push_back(std::move(stat));
            }
            result.cluster_tables.push_back(std::move(table));
        }
    }

    // Ranked area rows.
    result.area_rows.reserve(areas.size());
    for (std::size_t a = 0; a < areas.size(); ++a) {
        if (!options.include_empty_in_ranking && areas[a].area.value == kEmptyValueToken)
            continue;
        result.area_rows.push_back(AreaContributionRow{areas[a].area, bac[a]});
    }
    rank_areas(result.area_rows);

    // Attribute consolidation: sum of BusinessAreaContribution over the
    // attribute's areas, including the (empty) area.
    for (std::size_t d = 0; d < dims.dimensions.size(); ++d) {
        const auto [begin, end] = dim_area_span[d];
        AttributeContributionRow row;
        row.attribute = dims.dimensions[d];
        row.distinct_values = end - begin;
        for (std::size_t a = begin; a < end; ++a)
            row.case_attribute_contribution += bac[a];
        result.attribute_rows.push_back(std::move(row));
    }
    rank_attributes(result.attribute_rows);
    return result;
}

} // namespace flowlens
