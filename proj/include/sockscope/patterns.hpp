#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sockscope/analysis.hpp"
#include "sockscope/corpus.hpp"
#include "sockscope/error.hpp"

namespace sockscope {

class TemplateError : public Error {
public:
  using Error::Error;
};

/// Matches one event. Unset fields are unconstrained.
struct EventPredicate {
  std::optional<ApiFunction> fn;  // unset together with `payload` means any call
  bool payload = false;           // any send/recv/read/write family call
  std::optional<int> level;
  std::optional<std::string> optname;  // compared by symbolic name
  std::optional<int> cmd;              // fcntl command
  std::uint32_t set_flags = 0;         // O_* bits that must be set in the fcntl flag word
  std::uint32_t clear_flags = 0;       // O_* bits that must be clear
  std::optional<unsigned long> request;  // ioctl request
  std::optional<AddressClass> addr_class;

  bool matches(const TraceEvent& e) const;
  friend bool operator==(const EventPredicate&, const EventPredicate&) = default;
};

enum class Anchor : std::uint8_t { prefix, suffix, anywhere };

std::string_view to_string(Anchor a);

struct PatternTemplate {
  std::string name;
  Anchor anchor = Anchor::anywhere;
  std::vector<EventPredicate> steps;

  friend bool operator==(const PatternTemplate&, const PatternTemplate&) = default;
};

PatternTemplate parse_template(std::string_view json_text);
PatternTemplate load_template(const std::filesystem::path& path);
std::string template_to_json(const PatternTemplate& t);

struct TemplateMatch {
  std::size_t first = 0;  // index of the event matched by steps[0]
  std::size_t length = 0;
};

/// Prefix templates must match from event 0, suffix templates must end on the
/// last event, anywhere templates report the leftmost match.
std::optional<TemplateMatch> match_template(const SocketLifecycle& lifecycle,
                                            const PatternTemplate& t);

struct Prevalence {
  std::uint64_t apps = 0;
  std::uint64_t sockets = 0;
  std::uint64_t total_sockets = 0;

  Ratio fraction() const { return {sockets, total_sockets}; }
};

/// Lifecycles matching the template, over every lifecycle in the corpus.
Prevalence pattern_prevalence(const Corpus& corpus, const PatternTemplate& t);
std::string prevalence_to_json(const PatternTemplate& t, const Prevalence& p);

/// Mining alphabet: the function name, with socket options refined as
/// "getsockopt(SO_ERROR)".
std::string event_symbol(const TraceEvent& e);

struct MinedPattern {
  std::vector<std::string> sequence;
  std::uint64_t support = 0;  // lifecycles containing the sequence contiguously
  bool maximal = false;       // no frequent one-symbol extension on either side

  friend bool operator==(const MinedPattern&, const MinedPattern&) = default;
};

/// Every contiguous symbol sequence of length <= max_len occurring in at least
/// min_support lifecycles. Sorted by support descending, then lexicographically.
std::vector<MinedPattern> mine_frequent(const Corpus& corpus, std::uint64_t min_support,
                                        std::size_t max_len, Execution exec = Execution::parallel);
std::vector<MinedPattern> mine_frequent(const std::vector<std::vector<std::string>>& sequences,
                                        std::uint64_t min_support, std::size_t max_len,
                                        Execution exec = Execution::parallel);

std::string mined_to_json(const std::vector<MinedPattern>& patterns);

/// Anywhere-anchored template matching exactly the mined sequence.
PatternTemplate as_template(const MinedPattern& p);

}  // namespace sockscope
