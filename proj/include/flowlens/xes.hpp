#pragma once

#include <charconv>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowlens/errors.hpp"
#include "flowlens/eventlog.hpp"

namespace flowlens {

namespace detail {

/// Buffered byte source with 1-based line/column tracking.
class ByteSource {
public:
    explicit ByteSource(std::istream& in) : in_(in), buffer_(1 << 16) {}

    int peek() {
        if (pos_ == end_ && !fill())
            return -1;
        return static_cast<unsigned char>(buffer_[pos_]);
    }

    int get() {
        const int c = peek();
        if (c < 0)
            return c;
        ++pos_;
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    bool fill() {
        in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        end_ = static_cast<std::size_t>(in_.gcount());
        pos_ = 0;
        return end_ > 0;
    }

    std::istream& in_;
    std::vector<char> buffer_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

enum class XmlTokenKind { StartElement, EndElement, Eof };

struct XmlToken {
    XmlTokenKind kind = XmlTokenKind::Eof;
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::size_t line = 0;
    std::size_t column = 0;

    const std::string* attribute(const std::string& key) const {
        for (const auto& [k, v] : attributes)
            if (k == key)
                return &v;
        return nullptr;
    }
};

/// Pull reader for the XML subset XES uses: elements, attributes,
/// comments, processing instructions, DOCTYPE, CDATA. Character data
/// between tags is skipped (XES carries data in attributes only).
class XmlReader {
public:
    explicit XmlReader(std::istream& in) : src_(in) { skip_bom(); }

    XmlToken next() {
        if (pending_end_) {
            XmlToken token;
            token.kind = XmlTokenKind::EndElement;
            token.name = open_.back();
            token.line = src_.line();
            token.column = src_.column();
            open_.pop_back();
            pending_end_ = false;
            return token;
        }
        for (;;) {
            skip_text();
            const std::size_t line = src_.line();
            const std::size_t col = src_.column();
            int c = src_.get();
            if (c < 0) {
                if (!open_.empty())
                    throw ParseError("unexpected end of input: element '" + open_.back() +
                                         "' is not closed",
                                     line, col);
                return XmlToken{XmlTokenKind::Eof, "", {}, line, col};
            }
            if (c != '<')
                throw ParseError("unexpected character in markup", line, col);
            const int p = src_.peek();
            if (p == '?') {
                skip_processing_instruction();
            } else if (p == '!') {
                skip_declaration(line, col);
            } else if (p == '/') {
                src_.get();
                XmlToken token;
                token.kind = XmlTokenKind::EndElement;
                token.line = line;
                token.column = col;
                token.name = read_name(line, col);
                skip_spaces();
                expect('>', "end tag");
                if (open_.empty() || open_.back() != token.name)
                    throw ParseError("mismatched end tag </" + token.name + ">", line, col);
                open_.pop_back();
                return token;
            } else {
                return read_start_element(line, col);
            }
        }
    }

    /// Consumes everything up to and including the end tag matching the
    /// start element just returned.
    void skip_subtree() {
        std::size_t depth = 1;
        while (depth > 0) {
            const XmlToken token = next();
            switch (token.kind) {
            case XmlTokenKind::StartElement:
                ++depth;
                break;
            case XmlTokenKind::EndElement:
                --depth;
                break;
            case XmlTokenKind::Eof:
                throw ParseError("unexpected end of input while skipping subtree", src_.line(),
                                 src_.column());
            }
        }
    }

private:
    void skip_bom() {
        if (src_.peek() == 0xEF) {
            src_.get();
            src_.get();
            src_.get();
        }
    }

    static bool is_space(int c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

    static bool is_name_start(int c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' || c >= 0x80;
    }

    static bool is_name_char(int c) {
        return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
    }

    void skip_spaces() {
        while (is_space(src_.peek()))
            src_.get();
    }

    void skip_text() {
        // Character data and CDATA are ignored; '<' starts the next token.
        for (;;) {
            const int c = src_.peek();
            if (c < 0 || c == '<')
                return;
            src_.get();
        }
    }

    void expect(char expected, const char* where) {
        const std::size_t line = src_.line();
        const std::size_t col = src_.column();
        const int c = src_.get();
        if (c != expected)
            throw ParseError(std::string("expected '") + expected + "' in " + where, line, col);
    }

    std::string read_name(std::size_t line, std::size_t col) {
        std::string name;
        int c = src_.peek();
        if (!is_name_start(c))
            throw ParseError("expected element or attribute name", line, col);
        while (is_name_char(src_.peek()))
            name.push_back(static_cast<char>(src_.get()));
        return name;
    }

    void skip_processing_instruction() {
        // "<?" already half-consumed ('<' read, '?' pending).
        src_.get();
        int prev = 0;
        for (;;) {
            const int c = src_.get();
            if (c < 0)
                throw ParseError("unterminated processing instruction", src_.line(), src_.column());
            if (prev == '?' && c == '>')
                return;
            prev = c;
        }
    }

    void skip_declaration(std::size_t line, std::size_t col) {
        src_.get(); // '!'
        if (src_.peek() == '-') {
            // comment: <!-- ... -->
            src_.get();
            if (src_.get() != '-')
                throw ParseError("malformed comment", line, col);
            int d1 = 0, d2 = 0;
            for (;;) {
                const int c = src_.get();
                if (c < 0)
                    throw ParseError("unterminated comment", line, col);
                if (d1 == '-' && d2 == '-' && c == '>')
                    return;
                d1 = d2;
                d2 = c;
            }
        }
        if (src_.peek() == '[') {
            // CDATA section: <![CDATA[ ... ]]>
            int d1 = 0, d2 = 0;
            for (;;) {
                const int c = src_.get();
                if (c < 0)
                    throw ParseError("unterminated CDATA section", line, col);
                if (d1 == ']' && d2 == ']' && c == '>')
                    return;
                d1 = d2;
                d2 = c;
            }
        }
        // DOCTYPE or similar: skip to '>' balancing an internal subset.
        int depth = 0;
        for (;;) {
            const int c = src_.get();
            if (c < 0)
                throw ParseError("unterminated declaration", line, col);
            if (c == '[')
                ++depth;
            else if (c == ']')
                --depth;
            else if (c == '>' && depth == 0)
                return;
        }
    }

    std::string read_attribute_value() {
        const std::size_t line = src_.line();
        const std::size_t col = src_.column();
        const int quote = src_.get();
        if (quote != '"' && quote != '\'')
            throw ParseError("attribute value must be quoted", line, col);
        std::string value;
        for (;;) {
            const int c = src_.get();
            if (c < 0)
                throw ParseError("unterminated attribute value", line, col);
            if (c == quote)
                return value;
            if (c == '<')
                throw ParseError("'<' is not allowed in attribute values", src_.line(), src_.column());
            if (c == '&') {
                value += read_entity();
                continue;
            }
            value.push_back(static_cast<char>(c));
        }
    }

    std::string read_entity() {
        const std::size_t line = src_.line();
        const std::size_t col = src_.column();
        std::string entity;
        for (;;) {
            const int c = src_.get();
            if (c < 0 || entity.size() > 12)
                throw ParseError("malformed entity reference", line, col);
            if (c == ';')
                break;
            entity.push_back(static_cast<char>(c));
        }
        if (entity == "amp")
            return "&";
        if (entity == "lt")
            return "<";
        if (entity == "gt")
            return ">";
        if (entity == "quot")
            return "\"";
        if (entity == "apos")
            return "'";
        if (!entity.empty() && entity[0] == '#') {
            std::uint32_t code = 0;
            const bool hex = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X');
            const char* begin = entity.data() + (hex ? 2 : 1);
            const char* end = entity.data() + entity.size();
            auto [p, ec] = std::from_chars(begin, end, code, hex ? 16 : 10);
            if (ec != std::errc() || p != end || code == 0 || code > 0x10FFFF)
                throw ParseError("malformed character reference '&" + entity + ";'", line, col);
            return encode_utf8(code);
        }
        throw ParseError("unknown entity '&" + entity + ";'", line, col);
    }

    static std::string encode_utf8(std::uint32_t code) {
        std::string out;
        if (code < 0x80) {
            out.push_back(static_cast<char>(code));
        } else if (code < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (code >> 6)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else if (code < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (code >> 12)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (code >> 18)));
            out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
        }
        return out;
    }

    XmlToken read_start_element(std::size_t line, std::size_t col) {
        XmlToken token;
        token.kind = XmlTokenKind::StartElement;
        token.line = line;
        token.column = col;
        token.name = read_name(line, col);
        for (;;) {
            skip_spaces();
            const int c = src_.peek();
            if (c == '>') {
                src_.get();
                open_.push_back(token.name);
                return token;
            }
            if (c == '/') {
                src_.get();
                expect('>', "self-closing tag");
                open_.push_back(token.name);
                pending_end_ = true;
                return token;
            }
            if (c < 0)
                throw ParseError("unexpected end of input inside tag <" + token.name + ">", line, col);
            const std::size_t aline = src_.line();
            const std::size_t acol = src_.column();
            std::string attr_name = read_name(aline, acol);
            skip_spaces();
            expect('=', "attribute");
            skip_spaces();
            token.attributes.emplace_back(std::move(attr_name), read_attribute_value());
        }
    }

    ByteSource src_;
    std::vector<std::string> open_;
    bool pending_end_ = false;
};

} // namespace detail

struct XesOptions {
    /// strict: malformed events/traces abort the parse; lenient (default)
    /// drops them with counted warnings.
    bool strict = false;
};

namespace detail {

// XES attribute element -> typed value. Unknown kinds and unparseable
// payloads degrade to strings in lenient mode.
inline std::optional<AttributeValue> typed_xes_value(const std::string& kind, const std::string& raw,
                                                     bool strict, IngestStats& stats,
                                                     std::size_t line, std::size_t col) {
    if (kind == "string" || kind == "id")
        return AttributeValue::string(raw);
    if (kind == "date") {
        if (auto ts = parse_iso8601(raw))
            return AttributeValue::instant(*ts);
        if (strict)
            throw ParseError("unparseable date value '" + raw + "'", line, col);
        stats.warn("unparseable date '" + raw + "' kept as string");
        return AttributeValue::string(raw);
    }
    if (kind == "int") {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (ec == std::errc() && p == raw.data() + raw.size())
            return AttributeValue::integer(v);
        if (strict)
            throw ParseError("unparseable int value '" + raw + "'", line, col);
        stats.warn("unparseable int '" + raw + "' kept as string");
        return AttributeValue::string(raw);
    }
    if (kind == "float") {
        double v = 0;
        auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (ec == std::errc() && p == raw.data() + raw.size())
            return AttributeValue::decimal(v);
        if (strict)
            throw ParseError("unparseable float value '" + raw + "'", line, col);
        stats.warn("unparseable float '" + raw + "' kept as string");
        return AttributeValue::string(raw);
    }
    if (kind == "boolean") {
        if (raw == "true" || raw == "TRUE" || raw == "True")
            return AttributeValue::boolean(true);
        if (raw == "false" || raw == "FALSE" || raw == "False")
            return AttributeValue::boolean(false);
        if (strict)
            throw ParseError("unparseable boolean value '" + raw + "'", line, col);
        stats.warn("unparseable boolean '" + raw + "' kept as string");
        return AttributeValue::string(raw);
    }
    ++stats.unknown_attribute_kinds;
    stats.warn("unknown attribute kind '" + kind + "' kept as string");
    return AttributeValue::string(raw);
}

} // namespace detail

/// Parses an XES log: log -> trace* -> event*, attributes as child
/// elements keyed by "key"/"value". The activity label comes from
/// "concept:name", the timestamp from "time:timestamp"; both are lifted
/// out of the attribute maps.
inline EventLog parse_xes(std::istream& in, const XesOptions& options = {},
                          IngestStats* stats_out = nullptr) {
    IngestStats local_stats;
    IngestStats& stats = stats_out ? *stats_out : local_stats;

    detail::XmlReader reader(in);
    detail::XmlToken token = reader.next();
    if (token.kind != detail::XmlTokenKind::StartElement || token.name != "log")
        throw ParseError("expected root element <log>", token.line, token.column);

    // Reads the children of an open <trace> or <event> element: attribute
    // elements populate `attrs`; nested structures are skipped; <event>
    // children (inside traces) trigger the callback.
    auto read_attribute_children = [&](AttrMap& attrs, auto&& on_event) {
        for (;;) {
            detail::XmlToken child = reader.next();
            if (child.kind == detail::XmlTokenKind::EndElement)
                return;
            if (child.kind == detail::XmlTokenKind::Eof)
                throw ParseError("unexpected end of input", child.line, child.column);
            if (child.name == "event" && on_event(child))
                continue;
            const std::string* key = child.attribute("key");
            const std::string* value = child.attribute("value");
            if (key && value) {
                auto typed = detail::typed_xes_value(child.name, *value, options.strict, stats,
                                                     child.line, child.column);
                if (typed)
                    attrs[*key] = std::move(*typed);
            }
            reader.skip_subtree();
        }
    };

    std::vector<Case> cases;
    std::set<std::string> seen_ids;
    std::size_t trace_ordinal = 0;

    for (;;) {
        token = reader.next();
        if (token.kind == detail::XmlTokenKind::Eof)
            break;
        if (token.kind == detail::XmlTokenKind::EndElement)
            continue; // </log>
        if (token.name != "trace") {
            reader.skip_subtree(); // extensions, globals, classifiers, log attributes
            continue;
        }

        ++trace_ordinal;
        AttrMap trace_attrs;
        std::vector<Event> events;

        read_attribute_children(trace_attrs, [&](const detail::XmlToken& event_token) {
            AttrMap event_attrs;
            read_attribute_children(event_attrs, [](const detail::XmlToken&) { return false; });
            Event event;
            auto name_it = event_attrs.find("concept:name");
            if (name_it == event_attrs.end() || name_it->second.canonical().empty()) {
                if (options.strict)
                    throw ParseError("event without concept:name", event_token.line,
                                     event_token.column);
                ++stats.events_dropped;
                return true;
            }
            event.activity = name_it->second.canonical();
            event_attrs.erase(name_it);
            auto time_it = event_attrs.find("time:timestamp");
            if (time_it != event_attrs.end()) {
                if (time_it->second.kind() == AttrKind::Instant)
                    event.timestamp = parse_iso8601(time_it->second.canonical());
                event_attrs.erase(time_it);
            }
            event.attributes = std::move(event_attrs);
            events.push_back(std::move(event));
            return true;
        });

        if (events.empty()) {
            if (options.strict)
                throw ParseError("empty trace (no usable events)", token.line, token.column);
            ++stats.empty_traces_dropped;
            continue;
        }

        Case c;
        auto id_it = trace_attrs.find("concept:name");
        if (id_it != trace_attrs.end() && !id_it->second.canonical().empty()) {
            c.id = id_it->second.canonical();
            trace_attrs.erase(id_it);
        } else {
            c.id = "case_" + std::to_string(trace_ordinal);
        }
        c.id = detail::dedupe_case_id(c.id, seen_ids, stats);
        c.attributes = std::move(trace_attrs);
        c.events = std::move(events);
        detail::order_events(c.events);
        cases.push_back(std::move(c));
    }

    return EventLog::from_cases(std::move(cases), Provenance{.source = "xes"});
}

} // namespace flowlens
