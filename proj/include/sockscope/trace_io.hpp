#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sockscope/trace_event.hpp"

namespace sockscope {

/// Appends one JSONL line (including the trailing newline) for `e`. This is
/// the only event writer; the preload library and the tools share it.
void append_event_json(const TraceEvent& e, std::string& out);

std::string serialize_events(const std::vector<TraceEvent>& events);

/// Parses one line. `line_no` is used for diagnostics only.
TraceEvent parse_event_line(std::string_view line, std::size_t line_no = 0);

/// Parses a JSONL stream. Blank lines are skipped; anything else malformed
/// throws ParseError / UnknownFunctionError naming the line.
std::vector<TraceEvent> parse_trace(std::istream& in);
std::vector<TraceEvent> parse_trace(std::string_view text);
std::vector<TraceEvent> parse_trace(std::istream& in, const TraceMeta& meta);

std::vector<TraceEvent> read_events_file(const std::filesystem::path& path);
void write_events_file(const std::filesystem::path& path, const std::vector<TraceEvent>& events);

std::string meta_to_json(const TraceMeta& meta);
TraceMeta meta_from_json(std::string_view text);
TraceMeta read_meta_file(const std::filesystem::path& path);
void write_meta_file(const std::filesystem::path& path, const TraceMeta& meta);

// "events.<pid>.jsonl" -> pid, or -1 when the name does not match.
long events_file_pid(const std::filesystem::path& path);
std::string events_file_name(long pid);

}  // namespace sockscope
