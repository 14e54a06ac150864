#include "quorum/intervention.hpp"

#include "quorum/gateway/prompts.hpp"

namespace quorum {

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view text, const std::pair<E, std::string_view> (&table)[N], const char* what) {
  for (const auto& [value, name] : table) {
    if (iequals(text, name)) return value;
  }
  throw DomainError(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::pair<InterventionScope, std::string_view> kScopes[] = {
    {InterventionScope::None, "None"},
    {InterventionScope::Targeted, "Targeted"},
    {InterventionScope::Extensive, "Extensive"}};
constexpr std::pair<InterventionRole, std::string_view> kRoles[] = {
    {InterventionRole::Collaborative, "Collaborative"}, {InterventionRole::Directive, "Directive"}};
constexpr std::pair<InterventionPhase, std::string_view> kPhases[] = {
    {InterventionPhase::Discussion, "Discussion"}, {InterventionPhase::Evolution, "Evolution"}};
constexpr std::pair<Disposition, std::string_view> kDispositions[] = {
    {Disposition::Applied, "Applied"}, {Disposition::Passed, "Passed"}};
constexpr std::pair<WaitPolicy, std::string_view> kWaits[] = {
    {WaitPolicy::Interactive, "Interactive"}, {WaitPolicy::Headless, "Headless"}};

}  // namespace

std::string_view to_string(InterventionScope v) { return enum_name(v, kScopes); }
std::string_view to_string(InterventionRole v) { return enum_name(v, kRoles); }
std::string_view to_string(InterventionPhase v) { return enum_name(v, kPhases); }
std::string_view to_string(Disposition v) { return enum_name(v, kDispositions); }
std::string_view to_string(WaitPolicy v) { return enum_name(v, kWaits); }
InterventionScope intervention_scope_from_string(std::string_view t) { return enum_from(t, kScopes, "scope"); }
InterventionRole intervention_role_from_string(std::string_view t) { return enum_from(t, kRoles, "role"); }
InterventionPhase intervention_phase_from_string(std::string_view t) { return enum_from(t, kPhases, "phase"); }
Disposition disposition_from_string(std::string_view t) { return enum_from(t, kDispositions, "disposition"); }
WaitPolicy wait_policy_from_string(std::string_view t) { return enum_from(t, kWaits, "wait policy"); }

json InterventionRequest::to_json() const {
  return {{"request_id", request_id},
          {"phase", to_string(phase)},
          {"role", to_string(role)},
          {"batch_id", batch_id},
          {"entry_id", entry_id},
          {"entry_excerpt", entry_excerpt},
          {"round", round},
          {"codebook_version", codebook_version},
          {"context", context}};
}

InterventionRequest InterventionRequest::from_json(const json& doc) {
  InterventionRequest r;
  r.request_id = doc.at("request_id").get<std::string>();
  r.phase = intervention_phase_from_string(doc.at("phase").get<std::string>());
  r.role = intervention_role_from_string(doc.at("role").get<std::string>());
  r.batch_id = doc.value("batch_id", "");
  r.entry_id = doc.value("entry_id", "");
  r.entry_excerpt = doc.value("entry_excerpt", "");
  r.round = doc.value("round", 0);
  r.codebook_version = doc.value("codebook_version", 0);
  r.context = doc.value("context", json::object());
  return r;
}

InterventionResponse InterventionResponse::passed(InterventionRole role) {
  InterventionResponse r;
  r.role = role;
  r.pass = true;
  return r;
}

InterventionResponse intervention_response_from_json(const json& doc, const TaskSpec& spec) {
  if (!doc.is_object()) throw DomainError("intervention body must be an object");
  InterventionResponse r;
  r.role = intervention_role_from_string(doc.at("role").get<std::string>());
  r.text = doc.value("text", "");
  r.pass = doc.value("pass", false);
  if (doc.contains("directive_labels") && !doc.at("directive_labels").is_null()) {
    r.directive_labels = labels_from_json(doc.at("directive_labels"), spec);
  }
  if (doc.contains("remove_rules")) r.remove_rules = doc.at("remove_rules").get<std::vector<std::string>>();
  if (doc.contains("target") && !doc.at("target").is_null()) r.target = doc.at("target").get<std::string>();
  if (!r.pass && trim(r.text).empty() && !r.directive_labels && r.remove_rules.empty()) {
    throw DomainError("intervention needs text, a structured directive, or pass");
  }
  if ((r.directive_labels || !r.remove_rules.empty()) && r.role != InterventionRole::Directive) {
    throw DomainError("structured directives require the Directive role");
  }
  return r;
}

bool InterventionRecord::applies_to(const std::string& agent_id) const {
  return disposition == Disposition::Applied && (!target || target->empty() || *target == agent_id);
}

json InterventionRecord::to_json(const TaskSpec& spec) const {
  json doc = {{"request_id", request_id},
              {"phase", to_string(phase)},
              {"role", to_string(role)},
              {"expert_text", expert_text},
              {"target", target ? json(*target) : json(nullptr)},
              {"timestamp", timestamp},
              {"disposition", to_string(disposition)},
              {"remove_rules", remove_rules}};
  doc["directive_labels"] = directive_labels ? labels_to_json(*directive_labels, spec) : json(nullptr);
  return doc;
}

InterventionRecord InterventionRecord::from_json(const json& doc, const TaskSpec& spec) {
  InterventionRecord r;
  r.request_id = doc.at("request_id").get<std::string>();
  r.phase = intervention_phase_from_string(doc.at("phase").get<std::string>());
  r.role = intervention_role_from_string(doc.at("role").get<std::string>());
  r.expert_text = doc.value("expert_text", "");
  if (doc.contains("target") && !doc.at("target").is_null()) r.target = doc.at("target").get<std::string>();
  r.timestamp = doc.value("timestamp", "");
  r.disposition = disposition_from_string(doc.at("disposition").get<std::string>());
  if (doc.contains("directive_labels") && !doc.at("directive_labels").is_null()) {
    r.directive_labels = labels_from_json(doc.at("directive_labels"), spec);
  }
  r.remove_rules = doc.value("remove_rules", std::vector<std::string>{});
  return r;
}

std::string intervention_wrapper(const InterventionRecord& record) {
  const auto id = record.role == InterventionRole::Directive ? gateway::templates::kInterveneDirective
                                                             : gateway::templates::kInterveneCollaborative;
  return gateway::render_text(id, {{"FEEDBACK", record.expert_text}});
}

InterventionResponse ScriptedChannel::request(const InterventionRequest& request) {
  for (const auto& rule : rules_) {
    if (rule.phase && *rule.phase != request.phase) continue;
    if (rule.batch_id && *rule.batch_id != request.batch_id) continue;
    if (rule.entry_id && *rule.entry_id != request.entry_id) continue;
    if (rule.round && *rule.round != request.round) continue;
    return rule.response;
  }
  return InterventionResponse::passed(request.role);
}

std::vector<ScriptedChannel::Rule> ScriptedChannel::rules_from_json(const json& doc, const TaskSpec& spec,
                                                                    InterventionRole role) {
  std::vector<Rule> rules;
  if (!doc.is_array()) throw DomainError("scripted interventions must be an array");
  for (const auto& item : doc) {
    Rule rule;
    if (item.contains("phase")) rule.phase = intervention_phase_from_string(item.at("phase").get<std::string>());
    if (item.contains("batch")) rule.batch_id = item.at("batch").get<std::string>();
    if (item.contains("entry")) rule.entry_id = item.at("entry").get<std::string>();
    if (item.contains("round")) rule.round = item.at("round").get<int>();
    json body = item;
    if (!body.contains("role")) body["role"] = to_string(role);
    rule.response = intervention_response_from_json(body, spec);
    if (rule.response.role != role) throw DomainError("scripted intervention role differs from the run's role");
    rules.push_back(std::move(rule));
  }
  return rules;
}

InterventionQueue::InterventionQueue(InterventionRole role, WaitPolicy policy,
                                     std::chrono::milliseconds headless_timeout)
    : role_(role), policy_(policy), timeout_(headless_timeout) {}

InterventionResponse InterventionQueue::request(const InterventionRequest& request) {
  std::unique_lock lock(mutex_);
  if (closed_) throw QueueClosed();
  pending_ = request;
  answer_.reset();
  const auto ready = [&] { return closed_ || answer_.has_value(); };
  if (policy_ == WaitPolicy::Interactive) {
    cv_.wait(lock, ready);
  } else {
    cv_.wait_for(lock, timeout_, ready);
  }
  pending_.reset();
  if (answer_) {
    auto out = *answer_;
    answer_.reset();
    return out;
  }
  if (closed_) throw QueueClosed();
  // Headless timeout: the request is resolved as passed so late submissions conflict.
  resolved_[request.request_id] = "";
  return InterventionResponse::passed(request.role);
}

std::optional<InterventionRequest> InterventionQueue::pending() const {
  std::lock_guard lock(mutex_);
  return pending_;
}

InterventionQueue::SubmitStatus InterventionQueue::submit(const std::string& request_id,
                                                          const InterventionResponse& response,
                                                          const std::string& body) {
  std::lock_guard lock(mutex_);
  if (const auto it = resolved_.find(request_id); it != resolved_.end()) {
    return it->second == body ? SubmitStatus::Replayed : SubmitStatus::Conflict;
  }
  if (!pending_ || pending_->request_id != request_id) return SubmitStatus::NotFound;
  if (response.role != role_) return SubmitStatus::RoleMismatch;
  resolved_[request_id] = body;
  answer_ = response;
  pending_.reset();
  cv_.notify_all();
  return SubmitStatus::Accepted;
}

void InterventionQueue::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  cv_.notify_all();
}

}  // namespace quorum
