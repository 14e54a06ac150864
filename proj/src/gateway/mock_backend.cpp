#include "quorum/gateway/mock_backend.hpp"

#include <random>
#include <regex>
#include <set>

#include "quorum/codebook.hpp"
#include "quorum/verdict_parser.hpp"

namespace quorum::gateway {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; avoids std distributions, whose
// output differs between standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

LabelAssignment random_labels(const TaskSpec& spec, std::mt19937_64& rng) {
  LabelAssignment out;
  for (const auto& key : spec.keys) {
    auto& codes = out.by_key[key.name];
    if (key.kind == TaskKind::MultiClass) {
      codes.insert(key.codes[pick(rng, key.codes.size())]);
      continue;
    }
    for (const auto& code : key.codes) {
      if (unit(rng) < 0.35) codes.insert(code);
    }
    if (codes.empty()) codes.insert(key.codes[pick(rng, key.codes.size())]);
  }
  return out;
}

// Labels a text "really" has in the simulation; agents lean toward them.
LabelAssignment latent_labels(const TaskSpec& spec, std::string_view text) {
  std::mt19937_64 rng(splitmix(fnv1a(trim(text))));
  return random_labels(spec, rng);
}

LabelAssignment coded_labels(const TaskSpec& spec, std::string_view text, std::mt19937_64& rng) {
  if (unit(rng) < 0.65) return latent_labels(spec, text);
  return random_labels(spec, rng);
}

struct NumberedText {
  std::size_t ordinal;
  std::string text;
};

std::vector<NumberedText> numbered_texts(const std::string& message) {
  static const std::regex pattern(R"((?:^|\n)TEXT: (\d+)\. ([^\n]*))");
  std::vector<NumberedText> out;
  for (auto it = std::sregex_iterator(message.begin(), message.end(), pattern);
       it != std::sregex_iterator(); ++it) {
    out.push_back({std::stoul((*it)[1].str()), (*it)[2].str()});
  }
  return out;
}

std::string first_user_message(const Messages& messages) {
  for (const auto& m : messages) {
    if (m.role == Role::User) return m.content;
  }
  return {};
}

std::string last_assistant_message(const Messages& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::Assistant) return it->content;
  }
  return {};
}

std::vector<Rule> codebook_from_coding_prompt(const std::string& prompt, const TaskSpec& spec) {
  const auto begin = prompt.find("[CODEBOOK]\n\n");
  const auto end = prompt.find("\n\n[INSTRUCTION]");
  if (begin == std::string::npos || end == std::string::npos || end < begin) return {};
  const auto text = prompt.substr(begin + 12, end - begin - 12);
  return extract_codebook_section("CODEBOOK:\n" + text, nullptr, &spec).value_or(std::vector<Rule>{});
}

// Every "CODEBOOK:" section in a message, in order of appearance.
std::vector<std::vector<Rule>> all_codebook_sections(const std::string& message, const TaskSpec& spec) {
  static const std::regex heading(R"((?:^|\n)[A-Za-z ]*CODEBOOK:[ \t]*(?=\n|$))");
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(message.begin(), message.end(), heading);
       it != std::sregex_iterator(); ++it) {
    starts.push_back(static_cast<std::size_t>(it->position()));
  }
  std::vector<std::vector<Rule>> out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto end = i + 1 < starts.size() ? starts[i + 1] : message.size();
    if (auto rules = extract_codebook_section(message.substr(starts[i], end - starts[i]), nullptr, &spec)) {
      out.push_back(std::move(*rules));
    }
  }
  return out;
}

std::string clip_example(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), '"'), text.end());
  text = collapse_whitespace(text);
  if (text.size() > 80) {
    std::size_t cut = 80;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    text = text.substr(0, cut);
  }
  return text;
}

void merge_into(std::vector<Rule>& merged, const std::vector<Rule>& draft) {
  for (const auto& rule : draft) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const Rule& r) { return iequals(r.label, rule.label); });
    if (it == merged.end()) {
      merged.push_back(rule);
      continue;
    }
    for (const auto& example : rule.examples) {
      if (std::find(it->examples.begin(), it->examples.end(), example) == it->examples.end()) {
        it->examples.push_back(example);
      }
    }
    for (const auto& note : rule.clarifications) {
      if (std::find(it->clarifications.begin(), it->clarifications.end(), note) ==
          it->clarifications.end()) {
        it->clarifications.push_back(note);
      }
    }
  }
}

}  // namespace

MockBackend::MockBackend(std::vector<ScriptLine> script, std::uint64_t rng_seed, bool synthetic,
                         std::optional<TaskSpec> spec)
    : rng_seed_(rng_seed), synthetic_(synthetic), spec_(std::move(spec)) {
  if (synthetic_ && !spec_) throw DomainError("synthetic mock needs a task spec");
  for (auto& line : script) {
    const auto key = line.agent.value_or("");
    queues_[key].push_back(std::move(line));
  }
}

std::vector<MockBackend::CallRecord> MockBackend::call_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

std::string MockBackend::complete(const ChatRequest& request) {
  const auto prompt = last_user_content(request.messages);
  ++total_calls_;
  {
    std::lock_guard lock(log_mutex_);
    log_.push_back({request.agent_id, request.call_index, prompt});
  }
  auto queue = queues_.find(request.agent_id);
  if (queue == queues_.end()) queue = queues_.find("");
  if (queue != queues_.end() && request.call_index < queue->second.size()) {
    const auto& line = queue->second[request.call_index];
    if (line.match && prompt.find(*line.match) == std::string::npos) {
      throw GatewayError(GatewayError::Kind::ScriptMismatch,
                         request.agent_id + " call " + std::to_string(request.call_index) +
                             " expected a prompt containing '" + *line.match + "'");
    }
    return line.reply;
  }
  if (!synthetic_) {
    throw GatewayError(GatewayError::Kind::ScriptExhausted,
                       request.agent_id + " call " + std::to_string(request.call_index));
  }
  return synthesize(request);
}

std::string MockBackend::synthesize(const ChatRequest& request) const {
  const auto& spec = *spec_;
  std::mt19937_64 rng(splitmix(rng_seed_ ^ splitmix(fnv1a(request.agent_id) + request.call_index)));
  const auto prompt = last_user_content(request.messages);
  const auto verdict_line = [&](const LabelAssignment& labels) {
    return render_labels_json(labels, spec);
  };

  if (prompt.find("The mediator proposes the following CODEBOOK") != std::string::npos) {
    if (unit(rng) < 0.85) return "I agree with the proposed updated CODEBOOK.\n{\"AGREE\": \"yes\"}";
    return "The proposal drops detail I rely on, so I cannot accept it yet.\n{\"AGREE\": \"no\"}";
  }

  if (prompt.find("CURRENT CODEBOOK:") != std::string::npos) {
    auto sections = all_codebook_sections(prompt, spec);
    std::vector<Rule> merged = sections.empty() ? std::vector<Rule>{} : sections.front();
    for (std::size_t i = 1; i < sections.size(); ++i) merge_into(merged, sections[i]);
    return "### Summary of Opinions\nThe proposals add examples without conflicting with each "
           "other, so they are merged.\n\nUpdated CODEBOOK:\n" +
           render_rules(merged);
  }

  if (prompt.find("Revise the proposed CODEBOOK") != std::string::npos) {
    auto sections = all_codebook_sections(last_assistant_message(request.messages), spec);
    const auto rules = sections.empty() ? std::vector<Rule>{} : sections.back();
    return "The concerns are noted; the proposal stands as revised below.\n\nCODEBOOK:\n" +
           render_rules(rules);
  }

  if (prompt.find("please provide an updated CODEBOOK") != std::string::npos) {
    auto rules = codebook_from_coding_prompt(first_user_message(request.messages), spec);
    if (!rules.empty() && unit(rng) < 0.7) {
      return "The CODEBOOK adequately fits the current examples, so it stays unchanged.\n\nCODEBOOK:\n" +
             render_rules(rules);
    }
    if (rules.empty()) {
      for (const auto& code : spec.keys.front().codes) {
        Rule r;
        r.label = code;
        r.description = "Texts that should be coded " + code + ".";
        rules.push_back(std::move(r));
      }
    } else {
      std::vector<NumberedText> texts;
      for (const auto& m : request.messages) {
        if (m.role != Role::User) continue;
        auto found = numbered_texts(m.content);
        texts.insert(texts.end(), found.begin(), found.end());
      }
      if (!texts.empty()) {
        auto& rule = rules[pick(rng, rules.size())];
        auto example = clip_example(texts[pick(rng, texts.size())].text);
        if (!example.empty() &&
            std::find(rule.examples.begin(), rule.examples.end(), example) == rule.examples.end()) {
          rule.examples.push_back(std::move(example));
        }
      }
    }
    return "I propose adding an example drawn from this batch.\n\nCODEBOOK:\n" + render_rules(rules);
  }

  if (prompt.find("You are now conducting a discussion") != std::string::npos) {
    const auto texts = numbered_texts(prompt);
    const auto ordinal = texts.empty() ? 0 : texts.front().ordinal;
    const auto text = texts.empty() ? std::string() : texts.front().text;
    if (prompt.find("You MUST follow these instructions") != std::string::npos) {
      const auto wrapper_end = prompt.find("You are now conducting a discussion");
      for (const auto& block : find_json_objects(std::string_view(prompt).substr(0, wrapper_end))) {
        auto parsed = parse_verdict_object(block.value, spec);
        if (auto* labels = std::get_if<LabelAssignment>(&parsed)) {
          return "Following the expert's instruction.\n" + verdict_line(*labels);
        }
      }
    }
    std::vector<LabelAssignment> peers;
    for (const auto& block : find_json_objects(prompt)) {
      auto parsed = parse_verdict_object(block.value, spec);
      if (auto* labels = std::get_if<LabelAssignment>(&parsed)) peers.push_back(*labels);
    }
    std::optional<LabelAssignment> own;
    auto previous = last_assistant_message(request.messages);
    if (ordinal > 0) {
      auto segment = segment_by_ordinal(previous, {ordinal}).front();
      if (!segment.empty()) previous = segment;
    }
    auto parsed = parse_agent_verdict(previous, spec);
    if (auto* labels = std::get_if<LabelAssignment>(&parsed)) own = *labels;
    if (!peers.empty() && (unit(rng) < 0.6 || !own)) {
      return "The other responses are convincing, so I revise my answer.\n" +
             verdict_line(peers[pick(rng, peers.size())]);
    }
    return "I keep my previous reading of the text.\n" +
           verdict_line(own ? *own : coded_labels(spec, text, rng));
  }

  if (prompt.find("[INSTRUCTION]") != std::string::npos) {
    std::string reply;
    for (const auto& item : numbered_texts(prompt.substr(prompt.find("[INSTRUCTION]")))) {
      reply += "TEXT: " + std::to_string(item.ordinal) +
               ".\nApplying the CODEBOOK to this text gives the following answer.\n" +
               verdict_line(coded_labels(spec, item.text, rng)) + "\n\n";
    }
    return reply.empty() ? verdict_line(random_labels(spec, rng)) : reply;
  }

  return verdict_line(random_labels(spec, rng));
}

}  // namespace quorum::gateway
