#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jailkit {

// Literal placeholder a seed template uses for the harmful instruction.
inline constexpr std::string_view kQueryPlaceholder = "[QUERY]";

// Whether a batch kernel runs its OpenMP-parallel path or the serial
// reference path. Both must produce identical results.
enum class Execution { serial, parallel };

struct Query {
    std::string id;
    std::string text;
    std::optional<std::string> reference_response;
};

enum class Verdict { success, failure, undetermined };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct EvalResult {
    Verdict verdict = Verdict::undetermined;
    std::optional<int> score;  // 0..9
    std::string evaluator_name;
    std::optional<std::string> raw_judge_output;
    std::optional<double> probability;  // classifier judges only
    std::vector<std::string> warnings;

    bool succeeded() const noexcept { return verdict == Verdict::success; }
};

// Builds an EvalResult, rejecting scores outside 0..9.
EvalResult make_eval_result(Verdict verdict, std::string evaluator_name,
                            std::optional<int> score = std::nullopt,
                            std::optional<std::string> raw = std::nullopt);

struct SelectorStats {
    std::uint64_t visits = 0;
    double cumulative_reward = 0.0;
    double exp3_weight = 1.0;
    std::optional<std::uint64_t> last_selected_round;

    double mean_reward() const noexcept {
        return visits == 0 ? 0.0 : cumulative_reward / static_cast<double>(visits);
    }
};

using SeedId = std::size_t;

struct SeedNode {
    SeedId id = 0;
    std::string template_text;
    SelectorStats stats;
    std::optional<SeedId> parent;
    std::vector<SeedId> children;
    std::size_t depth = 0;
};

// Owns the seed templates of one attack loop. Roots are the initial seeds;
// children are templates derived from them during the run, so every node is
// reachable from exactly one root.
class SeedPool {
public:
    SeedPool() = default;
    explicit SeedPool(const std::vector<std::string>& templates);

    SeedId add_root(std::string template_text);
    SeedId add_child(SeedId parent, std::string template_text);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

    const SeedNode& at(SeedId id) const;
    SeedNode& at(SeedId id);
    const std::vector<SeedNode>& nodes() const noexcept { return nodes_; }
    const std::vector<SeedId>& roots() const noexcept { return roots_; }

    std::uint64_t total_visits() const noexcept;

private:
    std::vector<SeedNode> nodes_;
    std::vector<SeedId> roots_;
};

struct Instance {
    Query query;
    std::string jailbreak_prompt;
    std::vector<std::string> responses;
    std::optional<EvalResult> eval;
    std::optional<SeedId> seed_id;
    std::vector<std::string> mutation_trace;
    std::size_t round = 0;
    // Annotations added by the engine, e.g. "constraint-undetermined:delete_harmless".
    std::vector<std::string> flags;

    void record_mutation(std::string mutator_name) { mutation_trace.push_back(std::move(mutator_name)); }

    // Attaches a verdict; requires at least one stored response.
    void set_eval(EvalResult result);
};

// Fills every [QUERY] slot of the seed with the query text. A template with
// no slot gets the query appended after a newline.
Instance instantiate(const SeedNode& seed, const Query& query);
std::string instantiate_text(std::string_view template_text, std::string_view query_text);

struct Budget {
    std::size_t max_target_queries = 100;  // per dataset query
    std::size_t max_rounds = 5;
    bool stop_on_first_success = true;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

}  // namespace jailkit
