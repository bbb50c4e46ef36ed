#include "sockscope/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <netinet/in.h>
#include <omp.h>
#include <sys/socket.h>

#include "json.hpp"

namespace sockscope {

using nlohmann::json;

namespace {

const std::optional<NetAddress>* event_addr(const TraceEvent& e) {
  if (const auto* a = std::get_if<AddrArgs>(&e.args)) return &a->addr;
  if (const auto* io = std::get_if<IoArgs>(&e.args)) return &io->addr;
  return nullptr;
}

}  // namespace

bool EventPredicate::matches(const TraceEvent& e) const {
  if (payload && !is_payload(e.fn)) return false;
  if (fn && e.fn != *fn) return false;
  if (level || optname) {
    const auto* so = std::get_if<SockoptArgs>(&e.args);
    if (!so) return false;
    if (level && so->level != *level) return false;
    if (optname && optname_name(so->level, so->optname) != *optname) return false;
  }
  if (cmd || set_flags || clear_flags) {
    const auto* fc = std::get_if<FcntlArgs>(&e.args);
    if (!fc) return false;
    if (cmd && fc->cmd != *cmd) return false;
    if (set_flags || clear_flags) {
      if (!fc->flag_word) return false;
      auto word = static_cast<std::uint32_t>(*fc->flag_word);
      if ((word & set_flags) != set_flags || (word & clear_flags) != 0) return false;
    }
  }
  if (request) {
    const auto* io = std::get_if<IoctlArgs>(&e.args);
    if (!io || io->request != *request) return false;
  }
  if (addr_class) {
    const auto* addr = event_addr(e);
    if (!addr || !*addr || (*addr)->cls != *addr_class) return false;
  }
  return true;
}

std::string_view to_string(Anchor a) {
  switch (a) {
    case Anchor::prefix: return "prefix";
    case Anchor::suffix: return "suffix";
    case Anchor::anywhere: break;
  }
  return "anywhere";
}

namespace {

std::string step_context(std::size_t i) { return "step " + std::to_string(i) + ": "; }

std::uint32_t parse_status_flags(const json& v, std::size_t i, const char* key) {
  if (!v.is_array()) throw TemplateError(step_context(i) + key + " must be an array of O_* names");
  std::vector<std::string> names;
  for (const auto& n : v) {
    if (!n.is_string()) throw TemplateError(step_context(i) + key + " entries must be strings");
    names.push_back(n.get<std::string>());
  }
  auto bits = status_flags_value(names);
  if (!bits) throw TemplateError(step_context(i) + "unknown flag in " + key);
  return *bits;
}

std::string string_field(const json& v, std::size_t i, const std::string& key) {
  if (!v.is_string()) throw TemplateError(step_context(i) + key + " must be a string");
  return v.get<std::string>();
}

EventPredicate parse_step(const json& s, std::size_t i) {
  if (!s.is_object()) throw TemplateError(step_context(i) + "must be an object");
  EventPredicate p;
  for (const auto& [key, v] : s.items()) {
    if (key == "fn") {
      auto name = string_field(v, i, key);
      if (name == "payload") {
        p.payload = true;
      } else if (auto fn = api_function_from_name(name)) {
        p.fn = fn;
      } else {
        throw TemplateError(step_context(i) + "unknown function '" + name + "'");
      }
    } else if (key == "level") {
      auto name = string_field(v, i, key);
      p.level = level_value(name);
      if (!p.level) throw TemplateError(step_context(i) + "unknown level '" + name + "'");
    } else if (key == "optname") {
      p.optname = string_field(v, i, key);
    } else if (key == "cmd") {
      auto name = string_field(v, i, key);
      p.cmd = fcntl_cmd_value(name);
      if (!p.cmd) throw TemplateError(step_context(i) + "unknown fcntl command '" + name + "'");
    } else if (key == "set_flags") {
      p.set_flags = parse_status_flags(v, i, "set_flags");
    } else if (key == "clear_flags") {
      p.clear_flags = parse_status_flags(v, i, "clear_flags");
    } else if (key == "request") {
      auto name = string_field(v, i, key);
      p.request = ioctl_request_value(name);
      if (!p.request) throw TemplateError(step_context(i) + "unknown ioctl request '" + name + "'");
    } else if (key == "addr_class") {
      auto name = string_field(v, i, key);
      p.addr_class = address_class_from_name(name);
      if (!p.addr_class) throw TemplateError(step_context(i) + "unknown address class '" + name + "'");
    } else {
      throw TemplateError(step_context(i) + "unknown key '" + key + "'");
    }
  }
  if (p.optname && p.level && !optname_value(*p.level, *p.optname)) {
    throw TemplateError(step_context(i) + "unknown option '" + *p.optname + "' at that level");
  }
  if (p.optname && !p.level) {
    constexpr int levels[] = {SOL_SOCKET, IPPROTO_IP, IPPROTO_IPV6, IPPROTO_TCP, IPPROTO_UDP};
    if (std::none_of(std::begin(levels), std::end(levels),
                     [&](int l) { return optname_value(l, *p.optname).has_value(); })) {
      throw TemplateError(step_context(i) + "unknown option '" + *p.optname + "'");
    }
  }
  return p;
}

}  // namespace

PatternTemplate parse_template(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw TemplateError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw TemplateError("template must be a JSON object");
  PatternTemplate t;
  for (const auto& [key, v] : j.items()) {
    if (key != "name" && key != "anchor" && key != "steps") {
      throw TemplateError("unknown key '" + key + "'");
    }
  }
  if (!j.contains("name") || !j["name"].is_string()) throw TemplateError("missing string 'name'");
  t.name = j["name"].get<std::string>();
  if (j.contains("anchor")) {
    if (!j["anchor"].is_string()) throw TemplateError("'anchor' must be a string");
    auto a = j["anchor"].get<std::string>();
    if (a == "prefix") {
      t.anchor = Anchor::prefix;
    } else if (a == "suffix") {
      t.anchor = Anchor::suffix;
    } else if (a == "anywhere") {
      t.anchor = Anchor::anywhere;
    } else {
      throw TemplateError("anchor must be prefix, suffix or anywhere");
    }
  }
  if (!j.contains("steps") || !j["steps"].is_array()) throw TemplateError("missing array 'steps'");
  const auto& steps = j["steps"];
  if (steps.empty()) throw TemplateError("'steps' must not be empty");
  for (std::size_t i = 0; i < steps.size(); ++i) t.steps.push_back(parse_step(steps[i], i));
  return t;
}

PatternTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_template(ss.str());
  } catch (const TemplateError& e) {
    throw TemplateError(path.string() + ": " + e.what());
  }
}

std::string template_to_json(const PatternTemplate& t) {
  json steps = json::array();
  for (const auto& p : t.steps) {
    json s = json::object();
    if (p.payload) s["fn"] = "payload";
    if (p.fn) s["fn"] = std::string(to_string(*p.fn));
    if (p.level) s["level"] = level_name(*p.level);
    if (p.optname) s["optname"] = *p.optname;
    if (p.cmd) s["cmd"] = fcntl_cmd_name(*p.cmd);
    if (p.set_flags) s["set_flags"] = status_flag_names(p.set_flags);
    if (p.clear_flags) s["clear_flags"] = status_flag_names(p.clear_flags);
    if (p.request) s["request"] = ioctl_request_name(*p.request);
    if (p.addr_class) s["addr_class"] = std::string(to_string(*p.addr_class));
    steps.push_back(std::move(s));
  }
  json j = {{"name", t.name}, {"anchor", std::string(to_string(t.anchor))}, {"steps", steps}};
  return j.dump(2) + "\n";
}

namespace {

bool matches_at(const std::vector<TraceEvent>& events, std::size_t first, const PatternTemplate& t) {
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    if (!t.steps[k].matches(events[first + k])) return false;
  }
  return true;
}

}  // namespace

std::optional<TemplateMatch> match_template(const SocketLifecycle& l, const PatternTemplate& t) {
  const auto& ev = l.events;
  const auto len = t.steps.size();
  if (len == 0 || ev.size() < len) return std::nullopt;
  switch (t.anchor) {
    case Anchor::prefix:
      if (matches_at(ev, 0, t)) return TemplateMatch{0, len};
      return std::nullopt;
    case Anchor::suffix:
      if (matches_at(ev, ev.size() - len, t)) return TemplateMatch{ev.size() - len, len};
      return std::nullopt;
    case Anchor::anywhere:
      for (std::size_t i = 0; i + len <= ev.size(); ++i) {
        if (matches_at(ev, i, t)) return TemplateMatch{i, len};
      }
      return std::nullopt;
  }
  return std::nullopt;
}

Prevalence pattern_prevalence(const Corpus& corpus, const PatternTemplate& t) {
  Prevalence p;
  std::set<std::string> apps;
  for (const auto& trace : corpus.traces()) {
    for (const auto& l : trace.lifecycles) {
      ++p.total_sockets;
      if (match_template(l, t)) {
        ++p.sockets;
        apps.insert(trace.meta.app_name);
      }
    }
  }
  p.apps = apps.size();
  return p;
}

std::string prevalence_to_json(const PatternTemplate& t, const Prevalence& p) {
  json j = {{"template", t.name},
            {"anchor", std::string(to_string(t.anchor))},
            {"apps", p.apps},
            {"sockets", p.sockets},
            {"total_sockets", p.total_sockets},
            {"fraction", std::round(p.fraction().value() * 1e4) / 1e4}};
  return j.dump(2) + "\n";
}

std::string event_symbol(const TraceEvent& e) {
  std::string s(to_string(e.fn));
  if (const auto* so = std::get_if<SockoptArgs>(&e.args)) {
    s += "(" + optname_name(so->level, so->optname) + ")";
  }
  return s;
}

namespace {

using Gram = std::vector<int>;
using GramCounts = std::map<Gram, std::uint64_t>;

// Counts, once per sequence, every window of length k whose two (k-1)-windows
// were frequent at the previous level.
GramCounts count_level(const std::vector<std::vector<int>>& seqs,
                       const std::vector<std::vector<char>>& alive, std::size_t k, Execution exec) {
  GramCounts total;
  const auto n = static_cast<std::ptrdiff_t>(seqs.size());
  auto count_one = [&](std::size_t j, GramCounts& into) {
    const auto& s = seqs[j];
    if (s.size() < k) return;
    std::vector<Gram> grams;
    for (std::size_t i = 0; i + k <= s.size(); ++i) {
      if (k > 1 && !(alive[j][i] && alive[j][i + 1])) continue;
      grams.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(i),
                         s.begin() + static_cast<std::ptrdiff_t>(i + k));
    }
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++into[std::move(g)];
  };

  if (exec == Execution::serial) {
    for (std::ptrdiff_t j = 0; j < n; ++j) count_one(static_cast<std::size_t>(j), total);
    return total;
  }
#pragma omp parallel
  {
    GramCounts local;
#pragma omp for schedule(dynamic, 16) nowait
    for (std::ptrdiff_t j = 0; j < n; ++j) count_one(static_cast<std::size_t>(j), local);
#pragma omp critical(sockscope_mine_merge)
    for (auto& [g, c] : local) total[g] += c;
  }
  return total;
}

}  // namespace

std::vector<MinedPattern> mine_frequent(const std::vector<std::vector<std::string>>& sequences,
                                        std::uint64_t min_support, std::size_t max_len,
                                        Execution exec) {
  if (min_support < 1) throw Error("min_support must be at least 1");
  if (max_len < 1) throw Error("max_len must be at least 1");

  // Symbol ids follow lexicographic order, so comparing id vectors compares
  // the symbol sequences.
  std::vector<std::string> alphabet;
  for (const auto& s : sequences) alphabet.insert(alphabet.end(), s.begin(), s.end());
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  std::vector<std::vector<int>> seqs;
  seqs.reserve(sequences.size());
  for (const auto& s : sequences) {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const auto& sym : s) {
      ids.push_back(static_cast<int>(std::lower_bound(alphabet.begin(), alphabet.end(), sym) - alphabet.begin()));
    }
    seqs.push_back(std::move(ids));
  }

  std::vector<GramCounts> levels;
  std::vector<std::vector<char>> alive(seqs.size());
  for (std::size_t k = 1; k <= max_len; ++k) {
    auto counts = count_level(seqs, alive, k, exec);
    std::erase_if(counts, [&](const auto& kv) { return kv.second < min_support; });
    if (counts.empty()) break;
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      const auto& s = seqs[j];
      std::vector<char> next(s.size() >= k ? s.size() - k + 1 : 0, 0);
      for (std::size_t i = 0; i < next.size(); ++i) {
        if (k > 1 && !(alive[j][i] && alive[j][i + 1])) continue;
        Gram g(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + k));
        next[i] = counts.contains(g);
      }
      alive[j] = std::move(next);
    }
    levels.push_back(std::move(counts));
  }

  std::vector<MinedPattern> out;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::set<Gram> extended;
    if (li + 1 < levels.size()) {
      for (const auto& [g, _] : levels[li + 1]) {
        extended.emplace(g.begin(), g.end() - 1);
        extended.emplace(g.begin() + 1, g.end());
      }
    }
    for (const auto& [g, support] : levels[li]) {
      MinedPattern p;
      for (int id : g) p.sequence.push_back(alphabet[static_cast<std::size_t>(id)]);
      p.support = support;
      p.maximal = !extended.contains(g);
      out.push_back(std::move(p));
    }
  }
  std::sort(out.begin(), out.end(), [](const MinedPattern& a, const MinedPattern& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.sequence < b.sequence;
  });
  return out;
}

std::vector<MinedPattern> mine_frequent(const Corpus& corpus, std::uint64_t min_support,
                                        std::size_t max_len, Execution exec) {
  std::vector<std::vector<std::string>> seqs;
  for (const auto& t : corpus.traces()) {
    for (const auto& l : t.lifecycles) {
      std::vector<std::string> s;
      s.reserve(l.events.size());
      for (const auto& e : l.events) s.push_back(event_symbol(e));
      seqs.push_back(std::move(s));
    }
  }
  return mine_frequent(seqs, min_support, max_len, exec);
}

std::string mined_to_json(const std::vector<MinedPattern>& patterns) {
  json arr = json::array();
  for (const auto& p : patterns) {
    arr.push_back({{"sequence", p.sequence}, {"support", p.support}, {"maximal", p.maximal}});
  }
  return arr.dump(2) + "\n";
}

PatternTemplate as_template(const MinedPattern& p) {
  PatternTemplate t;
  t.anchor = Anchor::anywhere;
  for (const auto& sym : p.sequence) {
    if (!t.name.empty()) t.name += " ";
    t.name += sym;
    EventPredicate step;
    auto paren = sym.find('(');
    auto fn = api_function_from_name(sym.substr(0, paren));
    if (!fn) throw TemplateError("unknown function in symbol '" + sym + "'");
    step.fn = fn;
    if (paren != std::string::npos) step.optname = sym.substr(paren + 1, sym.size() - paren - 2);
    t.steps.push_back(std::move(step));
  }
  return t;
}

}  // namespace sockscope
