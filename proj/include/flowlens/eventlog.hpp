#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowlens/detail/rng.hpp"
#include "flowlens/errors.hpp"
#include "flowlens/time.hpp"

namespace flowlens {

enum class AttrKind { String, Integer, Decimal, Boolean, Instant };

/// A typed attribute value plus its canonical string form. The canonical
/// form is locale-independent and stable; it is the identity used when
/// attribute values become business-area values.
class AttributeValue {
public:
    AttributeValue() : kind_(AttrKind::String) {}

    static AttributeValue string(std::string v) {
        AttributeValue a;
        a.kind_ = AttrKind::String;
        a.canonical_ = std::move(v);
        return a;
    }

    static AttributeValue integer(std::int64_t v) {
        AttributeValue a;
        a.kind_ = AttrKind::Integer;
        a.canonical_ = std::to_string(v);
        return a;
    }

    static AttributeValue decimal(double v) {
        AttributeValue a;
        a.kind_ = AttrKind::Decimal;
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        a.canonical_.assign(buf, end);
        return a;
    }

    static AttributeValue boolean(bool v) {
        AttributeValue a;
        a.kind_ = AttrKind::Boolean;
        a.canonical_ = v ? "TRUE" : "FALSE";
        return a;
    }

    static AttributeValue instant(Timestamp t) {
        AttributeValue a;
        a.kind_ = AttrKind::Instant;
        a.canonical_ = format_iso8601(t);
        return a;
    }

    AttrKind kind() const noexcept { return kind_; }
    const std::string& canonical() const noexcept { return canonical_; }

    friend bool operator==(const AttributeValue&, const AttributeValue&) = default;

private:
    AttrKind kind_;
    std::string canonical_;
};

using AttrMap = std::map<std::string, AttributeValue>;

struct Event {
    std::string activity;
    std::optional<Timestamp> timestamp;
    AttrMap attributes;
};

struct Case {
    std::string id;
    AttrMap attributes;
    std::vector<Event> events;
};

/// Where a log came from and how (whether) it was sampled.
struct Provenance {
    std::string source;
    std::size_t original_case_count = 0;
    std::optional<std::uint64_t> sample_seed;
};

/// Counters accumulated while ingesting dirty logs in lenient mode.
struct IngestStats {
    std::size_t empty_traces_dropped = 0;
    std::size_t events_dropped = 0;
    std::size_t unknown_attribute_kinds = 0;
    std::size_t id_collisions = 0;
    std::size_t timestamp_fallbacks = 0;
    std::size_t case_attribute_conflicts = 0;
    std::vector<std::string> messages; // first few, for diagnostics

    void warn(std::string msg) {
        if (messages.size() < 20)
            messages.push_back(std::move(msg));
    }
};

class EventLog {
public:
    EventLog() = default;

    /// Builds a log from cases, computing the activity alphabet
    /// (lexicographically ordered distinct labels over all events).
    static EventLog from_cases(std::vector<Case> cases, Provenance provenance) {
        EventLog log;
        log.cases_ = std::move(cases);
        log.provenance_ = std::move(provenance);
        if (log.provenance_.original_case_count == 0)
            log.provenance_.original_case_count = log.cases_.size();
        log.recompute_alphabet();
        return log;
    }

    const std::vector<Case>& cases() const noexcept { return cases_; }
    std::size_t case_count() const noexcept { return cases_.size(); }
    const std::vector<std::string>& activity_alphabet() const noexcept { return alphabet_; }
    const Provenance& provenance() const noexcept { return provenance_; }

    std::size_t total_event_count() const {
        std::size_t n = 0;
        for (const auto& c : cases_)
            n += c.events.size();
        return n;
    }

private:
    void recompute_alphabet() {
        std::set<std::string> labels;
        for (const auto& c : cases_)
            for (const auto& e : c.events)
                labels.insert(e.activity);
        alphabet_.assign(labels.begin(), labels.end());
    }

    std::vector<Case> cases_;
    std::vector<std::string> alphabet_;
    Provenance provenance_;
};

namespace detail {

/// Orders a trace canonically: events carrying timestamps are sorted
/// ascending among the positions they occupy (stable for ties), events
/// without timestamps keep their document positions.
inline void order_events(std::vector<Event>& events) {
    std::vector<std::size_t> timed;
    timed.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
        if (events[i].timestamp)
            timed.push_back(i);
    if (timed.size() < 2)
        return;
    std::vector<Event> sorted;
    sorted.reserve(timed.size());
    for (std::size_t i : timed)
        sorted.push_back(std::move(events[i]));
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Event& a, const Event& b) { return *a.timestamp < *b.timestamp; });
    std::size_t next = 0;
    for (std::size_t i : timed)
        events[i] = std::move(sorted[next++]);
}

/// Resolves duplicate case ids by suffixing "#2", "#3", ...
inline std::string dedupe_case_id(const std::string& id, std::set<std::string>& seen,
                                  IngestStats& stats) {
    if (seen.insert(id).second)
        return id;
    ++stats.id_collisions;
    for (int n = 2;; ++n) {
        std::string candidate = id + "#" + std::to_string(n);
        if (seen.insert(candidate).second) {
            stats.warn("duplicate case id '" + id + "' renamed to '" + candidate + "'");
            return candidate;
        }
    }
}

} // namespace detail

/// Uniform sample of n cases without replacement, deterministic per seed.
/// Returns the log unchanged when n >= case count. Relative case order is
/// preserved; the alphabet is recomputed on the sample.
inline EventLog sample_cases(const EventLog& log, std::size_t n, std::uint64_t seed) {
    if (n < 1)
        throw ConfigError("sample size must be >= 1");
    if (n >= log.case_count())
        return log;
    detail::Rng rng(seed);
    std::vector<std::size_t> picked = rng.sample_indices(log.case_count(), n);
    std::sort(picked.begin(), picked.end());
    std::vector<Case> sampled;
    sampled.reserve(n);
    for (std::size_t i : picked)
        sampled.push_back(log.cases()[i]);
    Provenance prov = log.provenance();
    prov.original_case_count = log.case_count();
    prov.sample_seed = seed;
    return EventLog::from_cases(std::move(sampled), std::move(prov));
}

} // namespace flowlens
