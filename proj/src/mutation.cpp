#include "restinfer/mutation.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace restinfer {

std::string MutationOperator::name() const {
  switch (kind) {
    case MutationOperatorKind::AddRoute: return "add_route";
    case MutationOperatorKind::RemoveRoute: return "remove_route";
    case MutationOperatorKind::ModifyRoute: return "modify_route";
    case MutationOperatorKind::ResetRoute: return "reset_route";
    case MutationOperatorKind::AddParameter: return "add_parameter";
    case MutationOperatorKind::RemoveParameter: return "remove_parameter";
    case MutationOperatorKind::ModifyParameter: return "modify_parameter";
    case MutationOperatorKind::ModifyParameterName: return "modify_parameter_name";
    case MutationOperatorKind::ModifyParameterValue: return "modify_parameter_value";
    case MutationOperatorKind::ResetParameter: return "reset_parameter";
  }
  return "add_route";
}

std::optional<MaskTokenKind> MutationOperator::token() const {
  switch (kind) {
    case MutationOperatorKind::AddRoute:
    case MutationOperatorKind::ModifyRoute:
    case MutationOperatorKind::ResetRoute:
      return MaskTokenKind::Route;
    case MutationOperatorKind::RemoveRoute:
    case MutationOperatorKind::RemoveParameter:
      return std::nullopt;
    case MutationOperatorKind::AddParameter:
    case MutationOperatorKind::ModifyParameter:
    case MutationOperatorKind::ResetParameter:
      return MaskTokenKind::ParamPair;
    case MutationOperatorKind::ModifyParameterName:
      return MaskTokenKind::ParamName;
    case MutationOperatorKind::ModifyParameterValue:
      return MaskTokenKind::ParamValue;
  }
  return std::nullopt;
}

const std::array<MutationOperator, 10>& all_operators() {
  static const std::array<MutationOperator, 10> ops = {{
      {MutationOperatorKind::AddRoute},
      {MutationOperatorKind::RemoveRoute},
      {MutationOperatorKind::ModifyRoute},
      {MutationOperatorKind::ResetRoute},
      {MutationOperatorKind::AddParameter},
      {MutationOperatorKind::RemoveParameter},
      {MutationOperatorKind::ModifyParameter},
      {MutationOperatorKind::ModifyParameterName},
      {MutationOperatorKind::ModifyParameterValue},
      {MutationOperatorKind::ResetParameter},
  }};
  return ops;
}

std::optional<MutationOperator> operator_by_name(const std::string& name) {
  for (const auto& op : all_operators()) {
    if (op.name() == name) return op;
  }
  return std::nullopt;
}

bool SeedList::add_seed(const ApiRequest& req) {
  std::string key = canonical_key(req);
  if (!keys_.insert(key).second) return false;
  seeds_.push_back(req);
  return true;
}

std::vector<std::string> SeedList::routes() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& seed : seeds_) {
    std::string route = generalized_path(seed);
    if (seen.insert(route).second) out.push_back(route);
  }
  return out;
}

std::size_t Rng::pick_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("pick_index needs n > 0");
  std::uint64_t range = n;
  // Reject the top (2^64 mod range) values so the modulo is unbiased.
  std::uint64_t excess = (std::numeric_limits<std::uint64_t>::max() % range) + 1;
  if (excess == range) excess = 0;
  std::uint64_t v;
  do {
    v = gen_();
  } while (excess != 0 && v > std::numeric_limits<std::uint64_t>::max() - excess);
  return static_cast<std::size_t>(v % range);
}

std::optional<SelectionMode> parse_selection_mode(const std::string& s) {
  if (s == "random-seed") return SelectionMode::RandomSeed;
  if (s == "random-route") return SelectionMode::RandomRoute;
  return std::nullopt;
}

ApiRequest select_seed(const SeedList& list, SelectionMode mode,
                       const std::vector<std::string>& route_pool, Rng& rng) {
  if (list.empty()) throw EmptySeedList("no seeds to select from");
  if (mode == SelectionMode::RandomSeed) {
    return list.seeds()[rng.pick_index(list.size())];
  }
  if (route_pool.empty()) throw EmptySeedList("random-route selection needs a route pool");
  const std::string& route = route_pool[rng.pick_index(route_pool.size())];
  std::vector<const ApiRequest*> matching;
  for (const auto& seed : list.seeds()) {
    if (generalized_path(seed) == route) matching.push_back(&seed);
  }
  if (matching.empty()) throw EmptySeedList("no seeds on route " + route);
  return *matching[rng.pick_index(matching.size())];
}

bool is_applicable(const MutationOperator& op, const ApiRequest& seed) {
  switch (op.kind) {
    case MutationOperatorKind::RemoveRoute:
    case MutationOperatorKind::ModifyRoute:
      return !seed.path_segments.empty();
    case MutationOperatorKind::RemoveParameter:
    case MutationOperatorKind::ModifyParameter:
    case MutationOperatorKind::ModifyParameterName:
    case MutationOperatorKind::ModifyParameterValue:
      return !seed.query_params.empty();
    default:
      return true;
  }
}

namespace {

// Render path+query with one element swapped for mask text. `masked_pair`
// renders the whole pair, `masked_name`/`masked_value` half of it.
struct TemplateParts {
  std::vector<std::string> segments;
  std::vector<std::string> pairs;

  std::string render() const {
    std::string out;
    for (const auto& seg : segments) {
      out += '/';
      out += seg;
    }
    if (!pairs.empty()) {
      out += '?';
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i > 0) out += '&';
        out += pairs[i];
      }
    }
    if (out.empty()) out = "/";  // removing the only segment leaves the root request
    return out;
  }
};

TemplateParts parts_of(const ApiRequest& seed) {
  TemplateParts parts;
  parts.segments = seed.path_segments;
  for (const auto& p : seed.query_params) parts.pairs.push_back(p.name + "=" + p.value);
  return parts;
}

void require(bool ok, const MutationOperator& op, const char* what) {
  if (!ok) throw OperatorNotApplicable(op.name() + std::string(": ") + what);
}

}  // namespace

MaskedRequest apply_mask_at(const ApiRequest& seed, const MutationOperator& op, std::size_t site) {
  TemplateParts parts = parts_of(seed);
  const std::string route_tok = mask_token_text(MaskTokenKind::Route);
  const std::string pair_tok = mask_token_text(MaskTokenKind::ParamPair);
  const std::string name_tok = mask_token_text(MaskTokenKind::ParamName);
  const std::string value_tok = mask_token_text(MaskTokenKind::ParamValue);

  MaskedRequest out;
  out.base = seed;
  out.op = op;

  switch (op.kind) {
    case MutationOperatorKind::AddRoute:
      out.mask_site = parts.segments.size();
      parts.segments.push_back(route_tok);
      break;
    case MutationOperatorKind::RemoveRoute:
      require(!parts.segments.empty(), op, "needs at least one path segment");
      out.mask_site = parts.segments.size() - 1;
      parts.segments.pop_back();
      break;
    case MutationOperatorKind::ModifyRoute:
      require(!parts.segments.empty(), op, "needs at least one path segment");
      require(site < parts.segments.size(), op, "segment index out of range");
      out.mask_site = site;
      parts.segments[site] = route_tok;
      break;
    case MutationOperatorKind::ResetRoute:
      out.mask_site = 0;
      parts.segments = {route_tok};
      parts.pairs.clear();
      break;
    case MutationOperatorKind::AddParameter:
      out.mask_site = parts.pairs.size();
      parts.pairs.push_back(pair_tok);
      break;
    case MutationOperatorKind::RemoveParameter:
      require(!parts.pairs.empty(), op, "needs at least one query pair");
      require(site < parts.pairs.size(), op, "pair index out of range");
      out.mask_site = site;
      parts.pairs.erase(parts.pairs.begin() + static_cast<std::ptrdiff_t>(site));
      break;
    case MutationOperatorKind::ModifyParameter:
      require(!parts.pairs.empty(), op, "needs at least one query pair");
      require(site < parts.pairs.size(), op, "pair index out of range");
      out.mask_site = site;
      parts.pairs[site] = pair_tok;
      break;
    case MutationOperatorKind::ModifyParameterName:
      require(!seed.query_params.empty(), op, "needs at least one query pair");
      require(site < seed.query_params.size(), op, "pair index out of range");
      out.mask_site = site;
      parts.pairs[site] = name_tok + "=" + seed.query_params[site].value;
      break;
    case MutationOperatorKind::ModifyParameterValue:
      require(!seed.query_params.empty(), op, "needs at least one query pair");
      require(site < seed.query_params.size(), op, "pair index out of range");
      out.mask_site = site;
      parts.pairs[site] = seed.query_params[site].name + "=" + value_tok;
      break;
    case MutationOperatorKind::ResetParameter:
      out.mask_site = 0;
      parts.pairs = {pair_tok};
      break;
  }

  out.rendered_template = parts.render();
  return out;
}

MaskedRequest apply_mask(const ApiRequest& seed, const MutationOperator& op, Rng& rng) {
  if (!is_applicable(op, seed)) throw OperatorNotApplicable(op.name() + ": seed not eligible");
  std::size_t site = 0;
  switch (op.kind) {
    case MutationOperatorKind::ModifyRoute:
      site = rng.pick_index(seed.path_segments.size());
      break;
    case MutationOperatorKind::RemoveParameter:
    case MutationOperatorKind::ModifyParameter:
    case MutationOperatorKind::ModifyParameterName:
    case MutationOperatorKind::ModifyParameterValue:
      site = rng.pick_index(seed.query_params.size());
      break;
    default:
      break;
  }
  return apply_mask_at(seed, op, site);
}

namespace {

std::string trim_ws(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

std::string clean_value(const std::string& raw, MaskTokenKind token) {
  std::string v = strip_quotes(trim_ws(raw));
  if (token == MaskTokenKind::Route) {
    while (!v.empty() && v.front() == '/') v.erase(v.begin());
    while (!v.empty() && v.back() == '/') v.pop_back();
  }
  return v;
}

bool value_fits_token(const std::string& v, MaskTokenKind token) {
  if (v.empty()) return false;
  switch (token) {
    case MaskTokenKind::ParamPair:
      return v.find('=') != std::string::npos && v.find('&') == std::string::npos;
    case MaskTokenKind::ParamName:
      return v.find('=') == std::string::npos && v.find('&') == std::string::npos;
    case MaskTokenKind::ParamValue:
      return v.find('&') == std::string::npos;
    case MaskTokenKind::Route:
      return true;
  }
  return true;
}

std::string replace_once(const std::string& text, const std::string& needle,
                         const std::string& replacement) {
  auto pos = text.find(needle);
  if (pos == std::string::npos) return text;
  return text.substr(0, pos) + replacement + text.substr(pos + needle.size());
}

}  // namespace

std::vector<ApiRequest> instantiate(const MaskedRequest& masked,
                                    const std::vector<std::string>& values) {
  std::vector<ApiRequest> out;
  std::set<std::string> seen;

  auto push_unique = [&](const ApiRequest& req) {
    if (seen.insert(canonical_key(req)).second) out.push_back(req);
  };

  auto token = masked.op.token();
  if (!token) {
    // Remove operators: the template is already a complete request.
    try {
      ApiRequest req = parse_request(masked.rendered_template, masked.base.base_url,
                                     masked.base.method);
      req.body = masked.base.body;
      push_unique(req);
    } catch (const MalformedRequest&) {
    }
    return out;
  }

  std::vector<std::string> candidates;
  for (const auto& raw : values) {
    std::string v = clean_value(raw, *token);
    if (value_fits_token(v, *token)) candidates.push_back(v);
  }
  if (*token == MaskTokenKind::Route &&
      std::find(candidates.begin(), candidates.end(), "1") == candidates.end()) {
    candidates.push_back("1");
  }

  const std::string token_text = mask_token_text(*token);
  for (const auto& value : candidates) {
    std::string raw = replace_once(masked.rendered_template, token_text, value);
    try {
      ApiRequest req = parse_request(raw, masked.base.base_url, masked.base.method);
      req.body = masked.base.body;
      push_unique(req);
    } catch (const MalformedRequest&) {
      // Model noise that does not survive parsing is dropped.
    }
  }
  return out;
}

}  // namespace restinfer
