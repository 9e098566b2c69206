#include "forge/codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include <json.hpp>

namespace forge::codec {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kCallOpen = "<tool_call>";
constexpr std::string_view kCallClose = "</tool_call>";
constexpr std::string_view kKeyOpen = "<arg_key>";
constexpr std::string_view kKeyClose = "</arg_key>";
constexpr std::string_view kValueOpen = "<arg_value>";
constexpr std::string_view kValueClose = "</arg_value>";
constexpr std::string_view kResponseOpen = "<tool_response>";
constexpr std::string_view kResponseClose = "</tool_response>";
constexpr std::string_view kToolsOpen = "<tools>";
constexpr std::string_view kToolsClose = "</tools>";

constexpr std::string_view kToolsHead =
    "# Tools\n"
    "\n"
    "You may call one or more functions to assist with the user query.\n"
    "\n"
    "You are provided with function signatures within <tools></tools> XML tags:\n"
    "<tools>\n";

constexpr std::string_view kToolsTail =
    "\n</tools>\n"
    "\n"
    "For each function call, output the function name and arguments within the following XML format:\n"
    "<tool_call>{function-name}\n"
    "<arg_key>{arg-key-1}</arg_key>\n"
    "<arg_value>{arg-value-1}</arg_value>\n"
    "<arg_key>{arg-key-2}</arg_key>\n"
    "<arg_value>{arg-value-2}</arg_value>\n"
    "...\n"
    "</tool_call>";

constexpr std::array<std::pair<std::string_view, Role>, 4> kSentinels{{
    {"<|system|>", Role::system},
    {"<|user|>", Role::user},
    {"<|assistant|>", Role::assistant},
    {"<|observation|>", Role::observation},
}};

std::string_view sentinel(Role role) {
  for (const auto& [text, r] : kSentinels)
    if (r == role) return text;
  return {};
}

bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix) {
  return pos <= s.size() && s.substr(pos).starts_with(prefix);
}

// Length of a `<|name|>` token at `pos` (name = [a-z_]+), or 0.
std::size_t sentinel_like_at(std::string_view s, std::size_t pos) {
  if (!starts_with_at(s, pos, "<|")) return 0;
  std::size_t i = pos + 2;
  while (i < s.size() && (std::islower(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  if (i == pos + 2 || !starts_with_at(s, i, "|>")) return 0;
  return i + 2 - pos;
}

std::size_t find_sentinel(std::string_view s, std::size_t from) {
  for (std::size_t pos = s.find("<|", from); pos != std::string_view::npos; pos = s.find("<|", pos + 1)) {
    if (sentinel_like_at(s, pos) > 0) return pos;
  }
  return std::string_view::npos;
}

// Length of the reserved delimiter (or sentinel-like token) at `pos`, or 0.
std::size_t delimiter_at(std::string_view s, std::size_t pos) {
  if (s[pos] != '<') return 0;
  if (auto n = sentinel_like_at(s, pos)) return n;
  for (auto d : reserved_delimiters())
    if (starts_with_at(s, pos, d)) return d.size();
  return 0;
}

// Offset of the first delimiter inside `s`, or npos.
std::size_t first_delimiter(std::string_view s) {
  for (std::size_t i = s.find('<'); i != std::string_view::npos; i = s.find('<', i + 1)) {
    if (delimiter_at(s, i) > 0) return i;
  }
  return std::string_view::npos;
}

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void require_clean(std::string_view payload, std::string_view what) {
  if (first_delimiter(payload) != std::string_view::npos)
    throw InvariantViolation(std::string(what) + " contains a template delimiter");
}

void validate_message(const Message& m) {
  bool seen_text_last = false;
  for (std::size_t i = 0; i < m.segments.size(); ++i) {
    const auto& seg = m.segments[i];
    const bool is_call = seg.kind == SegmentKind::tool_call;
    if (is_call != std::holds_alternative<ToolCall>(seg.payload))
      throw InvariantViolation("segment payload does not match its kind");
    switch (seg.kind) {
      case SegmentKind::text:
        if (m.role == Role::observation) throw InvariantViolation("text segment in observation message");
        if (seg.str().empty()) throw InvariantViolation("empty text segment");
        if (seen_text_last) throw InvariantViolation("adjacent text segments");
        require_clean(seg.str(), "text");
        break;
      case SegmentKind::think:
        if (m.role != Role::assistant) throw InvariantViolation("think segment outside assistant message");
        if (i != 0) throw InvariantViolation("think segment must come first");
        require_clean(seg.str(), "think");
        break;
      case SegmentKind::tool_call:
        if (m.role != Role::assistant) throw InvariantViolation("tool call outside assistant message");
        validate(seg.call());
        break;
      case SegmentKind::tool_response:
        if (m.role != Role::observation) throw InvariantViolation("tool response outside observation message");
        require_clean(seg.str(), "tool response");
        break;
    }
    seen_text_last = seg.kind == SegmentKind::text;
  }
}

void validate_tools(const std::vector<ToolSchema>& tools) {
  for (const auto& t : tools) {
    if (t.json_line.empty()) throw InvariantViolation("empty tool schema");
    if (t.json_line.find('\n') != std::string::npos) throw InvariantViolation("tool schema spans several lines");
    require_clean(t.json_line, "tool schema");
  }
}

void render_segment(const Segment& seg, std::string& out) {
  switch (seg.kind) {
    case SegmentKind::text:
      out += seg.str();
      break;
    case SegmentKind::think:
      out.append(kThinkOpen).append(seg.str()).append(kThinkClose);
      break;
    case SegmentKind::tool_call: {
      const auto& call = seg.call();
      out.append(kCallOpen).append(call.name).push_back('\n');
      for (const auto& [k, v] : call.args) {
        out.append(kKeyOpen).append(k).append(kKeyClose).push_back('\n');
        out.append(kValueOpen).append(v).append(kValueClose).push_back('\n');
      }
      out.append(kCallClose);
      break;
    }
    case SegmentKind::tool_response:
      out.append(kResponseOpen).append("\n").append(seg.str()).append("\n").append(kResponseClose);
      break;
  }
}

void render_body_unchecked(const Message& m, std::string& out) {
  for (std::size_t i = 0; i < m.segments.size(); ++i) {
    if (i > 0) out.push_back('\n');
    render_segment(m.segments[i], out);
  }
}

class BodyParser {
 public:
  BodyParser(Role role, std::string_view body, std::size_t base) : role_(role), body_(body), base_(base) {}

  Message run() {
    Message m{role_, {}};
    std::size_t p = 0;
    while (p < body_.size()) {
      if (!m.segments.empty()) {
        if (body_[p] != '\n') fail(p, "expected newline between segments");
        ++p;
        if (p == body_.size()) fail(p, "dangling newline at end of message");
      }
      p = segment(p, m);
    }
    return m;
  }

 private:
  [[noreturn]] void fail(std::size_t p, const std::string& what) const { throw FormatError(base_ + p, what); }

  void check_clean(std::size_t start, std::string_view payload, std::string_view what) const {
    if (auto d = first_delimiter(payload); d != std::string_view::npos)
      fail(start + d, "template delimiter inside " + std::string(what));
  }

  std::size_t segment(std::size_t p, Message& m) {
    if (starts_with_at(body_, p, kThinkOpen)) return think(p, m);
    if (starts_with_at(body_, p, kCallOpen)) return tool_call(p, m);
    if (starts_with_at(body_, p, kResponseOpen)) return tool_response(p, m);
    if (delimiter_at(body_, p) > 0) fail(p, "unexpected tag");
    return text(p, m);
  }

  std::size_t think(std::size_t p, Message& m) {
    if (role_ != Role::assistant) fail(p, "think outside assistant message");
    if (!m.segments.empty()) fail(p, "think must be the first segment");
    const std::size_t start = p + kThinkOpen.size();
    const std::size_t end = body_.find(kThinkClose, start);
    if (end == std::string_view::npos) fail(p, "unclosed <think>");
    auto content = body_.substr(start, end - start);
    check_clean(start, content, "think");
    m.segments.push_back(Segment::think(std::string(content)));
    return end + kThinkClose.size();
  }

  std::size_t text(std::size_t p, Message& m) {
    if (role_ == Role::observation) fail(p, "text in observation message");
    std::size_t end = body_.size();
    for (auto tag : {kThinkOpen, kCallOpen, kResponseOpen}) {
      std::string needle = "\n" + std::string(tag);
      end = std::min(end, body_.find(needle, p));
    }
    auto content = body_.substr(p, end - p);
    check_clean(p, content, "text");
    m.segments.push_back(Segment::text(std::string(content)));
    return end;
  }

  std::size_t tool_call(std::size_t p, Message& m) {
    if (role_ != Role::assistant) fail(p, "tool_call outside assistant message");
    std::size_t q = p + kCallOpen.size();
    const std::size_t name_end = body_.find('\n', q);
    if (name_end == std::string_view::npos) fail(p, "unclosed <tool_call>");
    ToolCall call;
    call.name = std::string(body_.substr(q, name_end - q));
    if (call.name.empty() || has_whitespace(call.name)) fail(q, "invalid function name");
    check_clean(q, call.name, "function name");
    q = name_end + 1;
    std::set<std::string, std::less<>> keys;
    while (true) {
      if (starts_with_at(body_, q, kCallClose)) {
        m.segments.push_back(Segment::tool_call(std::move(call)));
        return q + kCallClose.size();
      }
      if (starts_with_at(body_, q, kValueOpen)) fail(q, "arg_value without preceding arg_key");
      if (!starts_with_at(body_, q, kKeyOpen)) fail(q, "unclosed <tool_call>");
      const std::size_t key_start = q + kKeyOpen.size();
      const std::size_t key_end = body_.find(kKeyClose, key_start);
      if (key_end == std::string_view::npos) fail(q, "unclosed <arg_key>");
      auto key = body_.substr(key_start, key_end - key_start);
      check_clean(key_start, key, "arg_key");
      if (!keys.insert(std::string(key)).second) fail(key_start, "duplicate argument key");
      q = key_end + kKeyClose.size();
      if (!starts_with_at(body_, q, "\n")) fail(q, "expected newline after </arg_key>");
      ++q;
      if (!starts_with_at(body_, q, kValueOpen)) fail(q, "arg_key without arg_value");
      const std::size_t value_start = q + kValueOpen.size();
      const std::size_t value_end = body_.find(kValueClose, value_start);
      if (value_end == std::string_view::npos) fail(q, "unclosed <arg_value>");
      auto value = body_.substr(value_start, value_end - value_start);
      check_clean(value_start, value, "arg_value");
      q = value_end + kValueClose.size();
      if (!starts_with_at(body_, q, "\n")) fail(q, "expected newline after </arg_value>");
      ++q;
      call.args.emplace_back(std::string(key), std::string(value));
    }
  }

  std::size_t tool_response(std::size_t p, Message& m) {
    if (role_ != Role::observation) fail(p, "tool_response outside observation message");
    std::size_t q = p + kResponseOpen.size();
    if (!starts_with_at(body_, q, "\n")) fail(q, "expected newline after <tool_response>");
    ++q;
    const std::string closing = "\n" + std::string(kResponseClose);
    const std::size_t end = body_.find(closing, q);
    if (end == std::string_view::npos) fail(p, "unclosed <tool_response>");
    auto content = body_.substr(q, end - q);
    check_clean(q, content, "tool_response");
    m.segments.push_back(Segment::tool_response(std::string(content)));
    return end + closing.size();
  }

  Role role_;
  std::string_view body_;
  std::size_t base_;
};

std::vector<ToolSchema> parse_tools(std::string_view body, std::size_t base) {
  std::size_t p = kToolsHead.size();
  const std::size_t close = body.find("\n" + std::string(kToolsClose), p);
  if (close == std::string_view::npos) throw FormatError(base + p, "unclosed <tools>");
  if (body.substr(close) != kToolsTail) throw FormatError(base + close, "malformed tools preamble");
  std::vector<ToolSchema> tools;
  while (p <= close) {
    std::size_t eol = body.find('\n', p);
    if (eol > close) eol = close;
    auto line = body.substr(p, eol - p);
    if (line.empty()) throw FormatError(base + p, "empty tool schema line");
    if (auto d = first_delimiter(line); d != std::string_view::npos)
      throw FormatError(base + p + d, "template delimiter inside tool schema");
    tools.push_back(ToolSchema{std::string(line)});
    p = eol + 1;
  }
  return tools;
}

void dump_python_style(const nlohmann::ordered_json& j, std::string& out) {
  if (j.is_object()) {
    out.push_back('{');
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first) out += ", ";
      first = false;
      out += nlohmann::json(k).dump();
      out += ": ";
      dump_python_style(v, out);
    }
    out.push_back('}');
  } else if (j.is_array()) {
    out.push_back('[');
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i > 0) out += ", ";
      dump_python_style(j[i], out);
    }
    out.push_back(']');
  } else {
    out += j.dump();
  }
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::observation: return "observation";
  }
  return "unknown";
}

Role role_from_string(std::string_view name) {
  for (auto r : {Role::system, Role::user, Role::assistant, Role::observation})
    if (to_string(r) == name) return r;
  throw InvariantViolation("unknown role '" + std::string(name) + "'");
}

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::text: return "text";
    case SegmentKind::think: return "think";
    case SegmentKind::tool_call: return "tool_call";
    case SegmentKind::tool_response: return "tool_response";
  }
  return "unknown";
}

SegmentKind segment_kind_from_string(std::string_view name) {
  for (auto k : {SegmentKind::text, SegmentKind::think, SegmentKind::tool_call, SegmentKind::tool_response})
    if (to_string(k) == name) return k;
  throw InvariantViolation("unknown segment kind '" + std::string(name) + "'");
}

const std::string* ToolCall::find(std::string_view key) const {
  for (const auto& [k, v] : args)
    if (k == key) return &v;
  return nullptr;
}

std::size_t Message::tool_call_count() const {
  return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(),
                                                [](const Segment& s) { return s.kind == SegmentKind::tool_call; }));
}

std::string ToolSchema::name() const {
  auto j = nlohmann::json::parse(json_line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return {};
  auto it = j.find("name");
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

ToolSchema make_tool_schema(std::string_view name, std::string_view description, std::string_view parameters_json) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["description"] = description;
  j["parameters"] = nlohmann::ordered_json::parse(parameters_json);
  ToolSchema schema;
  dump_python_style(j, schema.json_line);
  return schema;
}

const std::vector<std::string_view>& reserved_delimiters() {
  static const std::vector<std::string_view> all = [] {
    std::vector<std::string_view> v{kThinkOpen,  kThinkClose,    kCallOpen,       kCallClose,
                                    kKeyOpen,    kKeyClose,      kValueOpen,      kValueClose,
                                    kResponseOpen, kResponseClose, kToolsOpen,    kToolsClose};
    for (const auto& [s, r] : kSentinels) v.push_back(s);
    return v;
  }();
  return all;
}

void validate(const ToolCall& call) {
  if (call.name.empty()) throw InvariantViolation("tool call has an empty name");
  if (has_whitespace(call.name)) throw InvariantViolation("tool call name contains whitespace");
  require_clean(call.name, "tool call name");
  std::set<std::string_view> keys;
  for (const auto& [k, v] : call.args) {
    if (!keys.insert(k).second) throw InvariantViolation("duplicate argument key '" + k + "'");
    require_clean(k, "argument key");
    require_clean(v, "argument value");
  }
}

void validate(const std::vector<Message>& conversation) {
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    const auto& m = conversation[i];
    validate_message(m);
    if (m.role == Role::observation &&
        (i == 0 || conversation[i - 1].role != Role::assistant || conversation[i - 1].tool_call_count() == 0))
      throw InvariantViolation("observation must follow an assistant message with a tool call");
  }
}

std::string render_body(const Message& message) {
  validate_message(message);
  std::string out;
  render_body_unchecked(message, out);
  return out;
}

std::string render(const std::vector<Message>& conversation, const std::vector<ToolSchema>& tools) {
  validate(conversation);
  validate_tools(tools);
  std::string out;
  if (!tools.empty()) {
    out.append(sentinel(Role::system)).push_back('\n');
    out.append(kToolsHead);
    for (std::size_t i = 0; i < tools.size(); ++i) {
      if (i > 0) out.push_back('\n');
      out += tools[i].json_line;
    }
    out.append(kToolsTail);
  }
  for (const auto& m : conversation) {
    out.append(sentinel(m.role));
    if (!m.segments.empty()) {
      out.push_back('\n');
      render_body_unchecked(m, out);
    }
  }
  return out;
}

std::string render(const Conversation& conversation) { return render(conversation.messages, conversation.tools); }

Message parse_body(Role role, std::string_view body, std::size_t base_offset) {
  return BodyParser(role, body, base_offset).run();
}

Conversation parse(std::string_view text) {
  Conversation conv;
  if (text.empty()) return conv;
  if (sentinel_like_at(text, 0) == 0) throw FormatError(0, "expected a role sentinel");
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    const std::size_t len = sentinel_like_at(text, pos);
    const auto token = text.substr(pos, len);
    auto it = std::find_if(kSentinels.begin(), kSentinels.end(), [&](const auto& s) { return s.first == token; });
    if (it == kSentinels.end()) throw FormatError(pos, "unknown sentinel " + std::string(token));
    const Role role = it->second;
    const std::size_t sentinel_pos = pos;
    pos += len;
    std::size_t next = find_sentinel(text, pos);
    if (next == std::string_view::npos) next = text.size();

    Message message{role, {}};
    if (next > pos) {
      if (text[pos] != '\n') throw FormatError(pos, "expected newline after sentinel");
      const std::size_t body_start = pos + 1;
      if (body_start == next) throw FormatError(body_start, "empty message body");
      auto body = text.substr(body_start, next - body_start);
      if (first && role == Role::system && body.starts_with(kToolsHead)) {
        conv.tools = parse_tools(body, body_start);
        pos = next;
        first = false;
        continue;
      }
      message = parse_body(role, body, body_start);
    }
    if (role == Role::observation &&
        (conv.messages.empty() || conv.messages.back().role != Role::assistant ||
         conv.messages.back().tool_call_count() == 0))
      throw FormatError(sentinel_pos, "observation must follow an assistant message with a tool call");
    conv.messages.push_back(std::move(message));
    pos = next;
    first = false;
  }
  return conv;
}

bool format_correct(const Message& message) {
  try {
    const auto body = render_body(message);
    return parse_body(message.role, body) == message;
  } catch (const Error&) {
    return false;
  }
}

std::size_t json_escape_count(std::string_view value) {
  return static_cast<std::size_t>(std::count_if(value.begin(), value.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return c == '"' || c == '\\' || c < 0x20;
  }));
}

std::size_t template_escape_count(std::string_view value) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < value.size();) {
    if (auto n = delimiter_at(value, i)) {
      ++count;
      i += n;
    } else {
      ++i;
    }
  }
  return count;
}

EscapeOverhead escape_overhead(const ToolCall& call) {
  EscapeOverhead e;
  for (const auto& [k, v] : call.args) {
    e.template_escapes += template_escape_count(v);
    e.json_escapes += json_escape_count(v);
  }
  return e;
}

}  // namespace forge::codec
