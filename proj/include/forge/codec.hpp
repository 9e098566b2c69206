#pragma once

// Renderer and strict parser for the XML-like function-call chat template.
//
// A conversation renders as a sequence of role sentinels, each followed by a
// newline and the message body. Argument values travel verbatim between
// <arg_value> tags; anything that would collide with a delimiter is rejected
// at render time instead of being escaped. The full grammar is in
// docs/template-grammar.txt.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "forge/error.hpp"

namespace forge::codec {

enum class Role { system, user, assistant, observation };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ToolCall {
  std::string name;
  /// Ordered (key, value) pairs. Values are stored unescaped.
  std::vector<std::pair<std::string, std::string>> args;

  const std::string* find(std::string_view key) const;

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

enum class SegmentKind { text, think, tool_call, tool_response };

std::string_view to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(std::string_view name);

struct Segment {
  SegmentKind kind = SegmentKind::text;
  std::variant<std::string, ToolCall> payload;

  static Segment text(std::string s) { return {SegmentKind::text, std::move(s)}; }
  static Segment think(std::string s) { return {SegmentKind::think, std::move(s)}; }
  static Segment tool_call(ToolCall c) { return {SegmentKind::tool_call, std::move(c)}; }
  static Segment tool_response(std::string s) { return {SegmentKind::tool_response, std::move(s)}; }

  /// Payload of a text, think or tool_response segment.
  const std::string& str() const { return std::get<std::string>(payload); }
  const ToolCall& call() const { return std::get<ToolCall>(payload); }

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Message {
  Role role = Role::user;
  std::vector<Segment> segments;

  std::size_t tool_call_count() const;

  friend bool operator==(const Message&, const Message&) = default;
};

/// A tool signature, kept as the opaque single-line JSON object shown inside
/// the <tools> block.
struct ToolSchema {
  std::string json_line;

  /// The "name" member of the JSON line, or empty if it has none.
  std::string name() const;

  friend bool operator==(const ToolSchema&, const ToolSchema&) = default;
};

/// Builds a schema line in the `{"key": value, ...}` layout used by the
/// template (", " and ": " separators, member order preserved).
ToolSchema make_tool_schema(std::string_view name, std::string_view description,
                            std::string_view parameters_json);

struct Conversation {
  std::vector<Message> messages;
  std::vector<ToolSchema> tools;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// Every delimiter the template reserves. Payloads may not contain any of them.
const std::vector<std::string_view>& reserved_delimiters();

/// Throws InvariantViolation if the messages break a type invariant.
void validate(const std::vector<Message>& conversation);

/// Throws InvariantViolation on an invalid call (empty name, whitespace in the
/// name, duplicate key, delimiter inside a key or value).
void validate(const ToolCall& call);

std::string render(const std::vector<Message>& conversation, const std::vector<ToolSchema>& tools = {});
std::string render(const Conversation& conversation);

/// Body of one message, without its sentinel. Validates the message alone.
std::string render_body(const Message& message);

Conversation parse(std::string_view text);

/// Parses one message body for the given role. Offsets in errors are relative
/// to `body` plus `base_offset`.
Message parse_body(Role role, std::string_view body, std::size_t base_offset = 0);

/// True when the message renders and parses back to itself.
bool format_correct(const Message& message);

struct EscapeOverhead {
  std::size_t template_escapes = 0;
  std::size_t json_escapes = 0;

  friend bool operator==(const EscapeOverhead&, const EscapeOverhead&) = default;
};

/// Characters that must be escaped to carry the call's values as RFC 8259
/// strings versus occurrences of template delimiters inside those values.
EscapeOverhead escape_overhead(const ToolCall& call);

std::size_t json_escape_count(std::string_view value);
std::size_t template_escape_count(std::string_view value);

}  // namespace forge::codec
