#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "flowlens/errors.hpp"
#include "flowlens/eventlog.hpp"

namespace flowlens {

namespace detail {

/// RFC-4180 record reader: quoted fields, "" escapes, embedded newlines,
/// LF or CRLF endings. Tracks the 1-based line where each record begins.
class CsvRecordReader {
public:
    explicit CsvRecordReader(std::istream& in) : in_(in) {}

    std::size_t record_line() const noexcept { return record_line_; }

    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        // Skip blank lines between records.
        while (c == '\n' || c == '\r') {
            if (c == '\n')
                ++line_;
            c = in_.get();
        }
        if (c == std::istream::traits_type::eof())
            return false;
        record_line_ = line_;
        std::string field;
        bool quoted = false;
        for (;;) {
            if (c == std::istream::traits_type::eof()) {
                if (quoted)
                    throw ParseError("unterminated quoted field", record_line_);
                fields.push_back(std::move(field));
                return true;
            }
            const char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    const int peek = in_.peek();
                    if (peek == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n')
                        ++line_;
                    field.push_back(ch);
                }
            } else if (ch == '"') {
                if (!field.empty())
                    throw ParseError("quote inside unquoted field", line_);
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (ch == '\r') {
                // swallow; the following \n terminates the record
            } else if (ch == '\n') {
                ++line_;
                fields.push_back(std::move(field));
                return true;
            } else {
                field.push_back(ch);
            }
            c = in_.get();
        }
    }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
};

inline void write_csv_field(std::ostream& out, const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"')
            out << '"';
        out << c;
    }
    out << '"';
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out << ',';
        write_csv_field(out, fields[i]);
    }
    out << '\n';
}

} // namespace detail

enum class TimeFormat { Iso8601, UnixSeconds, UnixMillis };

/// Maps CSV columns onto the event-log model. Columns not listed in
/// case_attribute_columns / event_attribute_columns are classified by
/// prefix: "event:<name>" columns become event attributes, everything
/// else a case attribute. An unset time column means "use 'timestamp'
/// if the header has it".
struct CsvMapping {
    std::string case_column = "case_id";
    std::string activity_column = "activity";
    std::optional<std::string> time_column;
    TimeFormat time_format = TimeFormat::Iso8601;
    std::vector<std::string> case_attribute_columns;
    std::vector<std::string> event_attribute_columns;
    bool strict = false;
};

namespace detail {

inline std::optional<Timestamp> parse_time_field(const std::string& text, TimeFormat format) {
    if (text.empty())
        return std::nullopt;
    switch (format) {
    case TimeFormat::Iso8601:
        return parse_iso8601(text);
    case TimeFormat::UnixSeconds: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size())
            return std::nullopt;
        return Timestamp{v * 1000};
    }
    case TimeFormat::UnixMillis: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size())
            return std::nullopt;
        return Timestamp{v};
    }
    }
    return std::nullopt;
}

} // namespace detail

/// Reads an event log from CSV (header row mandatory, one row per event).
inline EventLog parse_csv(std::istream& in, const CsvMapping& mapping = {},
                          IngestStats* stats_out = nullptr) {
    IngestStats local_stats;
    IngestStats& stats = stats_out ? *stats_out : local_stats;

    detail::CsvRecordReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header))
        throw ParseError("empty CSV input: header row is mandatory", 1);
    {
        std::set<std::string> seen;
        for (const auto& name : header)
            if (!seen.insert(name).second)
                throw ConfigError("duplicate CSV header column '" + name + "'");
    }

    auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        return std::nullopt;
    };

    const auto case_idx = find_column(mapping.case_column);
    if (!case_idx)
        throw ConfigError("CSV is missing the case id column '" + mapping.case_column + "'");
    const auto activity_idx = find_column(mapping.activity_column);
    if (!activity_idx)
        throw ConfigError("CSV is missing the activity column '" + mapping.activity_column + "'");
    std::optional<std::size_t> time_idx;
    if (mapping.time_column) {
        time_idx = find_column(*mapping.time_column);
        if (!time_idx)
            throw ConfigError("CSV is missing the timestamp column '" + *mapping.time_column + "'");
    } else {
        time_idx = find_column("timestamp");
    }

    enum class Role { Skip, CaseAttr, EventAttr };
    std::vector<Role> roles(header.size(), Role::CaseAttr);
    std::vector<std::string> attr_names(header.size());
    const std::set<std::string> explicit_case(mapping.case_attribute_columns.begin(),
                                              mapping.case_attribute_columns.end());
    const std::set<std::string> explicit_event(mapping.event_attribute_columns.begin(),
                                               mapping.event_attribute_columns.end());
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string& name = header[i];
        attr_names[i] = name;
        if (i == *case_idx || i == *activity_idx || (time_idx && i == *time_idx)) {
            roles[i] = Role::Skip;
        } else if (explicit_case.count(name)) {
            roles[i] = Role::CaseAttr;
        } else if (explicit_event.count(name)) {
            roles[i] = Role::EventAttr;
        } else if (name.rfind("event:", 0) == 0) {
            roles[i] = Role::EventAttr;
            attr_names[i] = name.substr(6);
        }
    }

    std::vector<Case> cases;
    std::map<std::string, std::size_t> case_index;
    bool any_timestamp = false;

    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const std::size_t line = reader.record_line();
        if (fields.size() != header.size()) {
            if (mapping.strict)
                throw ParseError("row has " + std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(header.size()),
                                 line);
            stats.warn("row with mismatched field count dropped (line " + std::to_string(line) + ")");
            ++stats.events_dropped;
            continue;
        }
        const std::string& case_id = fields[*case_idx];
        const std::string& activity = fields[*activity_idx];
        if (case_id.empty() || activity.empty()) {
            if (mapping.strict)
                throw ParseError(case_id.empty() ? "row with empty case id" : "row with empty activity",
                                 line);
            ++stats.events_dropped;
            continue;
        }

        Event event;
        event.activity = activity;
        if (time_idx) {
            const std::string& raw = fields[*time_idx];
            if (!raw.empty()) {
                event.timestamp = detail::parse_time_field(raw, mapping.time_format);
                if (!event.timestamp) {
                    if (mapping.strict)
                        throw ParseError("unparseable timestamp '" + raw + "'", line);
                    stats.warn("unparseable timestamp '" + raw + "' (line " + std::to_string(line) +
                               "), kept event without timestamp");
                    ++stats.timestamp_fallbacks;
                }
                any_timestamp = any_timestamp || event.timestamp.has_value();
            }
        }

        auto [it, inserted] = case_index.try_emplace(case_id, cases.size());
        if (inserted) {
            Case c;
            c.id = case_id;
            cases.push_back(std::move(c));
        }
        Case& c = cases[it->second];

        for (std::size_t i = 0; i < header.size(); ++i) {
            if (roles[i] == Role::Skip || fields[i].empty())
                continue;
            if (roles[i] == Role::EventAttr) {
                event.attributes[attr_names[i]] = AttributeValue::string(fields[i]);
            } else {
                auto [attr_it, attr_inserted] =
                    c.attributes.try_emplace(attr_names[i], AttributeValue::string(fields[i]));
                if (!attr_inserted && attr_it->second.canonical() != fields[i]) {
                    if (mapping.strict)
                        throw ParseError("case '" + case_id + "' has conflicting values for case attribute '" +
                                             attr_names[i] + "'",
                                         line);
                    ++stats.case_attribute_conflicts;
                }
            }
        }
        c.events.push_back(std::move(event));
    }

    if (any_timestamp)
        for (auto& c : cases)
            detail::order_events(c.events);

    return EventLog::from_cases(std::move(cases), Provenance{.source = "csv"});
}

/// Writes a log in the format parse_csv reads back: one row per event,
/// columns case_id, activity, timestamp (when any event has one), case
/// attributes (sorted), then event attributes (sorted, "event:"-prefixed).
/// Empty cells mean "attribute absent".
inline void write_csv(const EventLog& log, std::ostream& out) {
    std::set<std::string> case_attr_names;
    std::set<std::string> event_attr_names;
    bool any_timestamp = false;
    for (const auto& c : log.cases()) {
        for (const auto& [name, value] : c.attributes)
            case_attr_names.insert(name);
        for (const auto& e : c.events) {
            any_timestamp = any_timestamp || e.timestamp.has_value();
            for (const auto& [name, value] : e.attributes)
                event_attr_names.insert(name);
        }
    }

    std::vector<std::string> header = {"case_id", "activity"};
    if (any_timestamp)
        header.push_back("timestamp");
    for (const auto& name : case_attr_names)
        header.push_back(name);
    for (const auto& name : event_attr_names)
        header.push_back("event:" + name);
    detail::write_csv_row(out, header);

    std::vector<std::string> row;
    for (const auto& c : log.cases()) {
        for (const auto& e : c.events) {
            row.clear();
            row.push_back(c.id);
            row.push_back(e.activity);
            if (any_timestamp)
                row.push_back(e.timestamp ? format_iso8601(*e.timestamp) : "");
            for (const auto& name : case_attr_names) {
                auto it = c.attributes.find(name);
                row.push_back(it == c.attributes.end() ? "" : it->second.canonical());
            }
            for (const auto& name : event_attr_names) {
                auto it = e.attributes.find(name);
                row.push_back(it == e.attributes.end() ? "" : it->second.canonical());
            }
            detail::write_csv_row(out, row);
        }
    }
}

} // namespace flowlens
