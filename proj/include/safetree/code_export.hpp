#pragma once

// Nested-if controller code generation, plus an interpreter for exactly the
// C subset the generator emits.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safetree/decision_tree.hpp"

namespace safetree {

struct CodeExportOptions {
  std::string function_name = "controller";
  std::string enum_name = "action";
};

// Emits one C function of the feature variables returning the
// lexicographically first pure action of each leaf. Half-integer thresholds
// are scaled to integers (`2 * x <= 45`) with the original threshold in a
// comment. Output is deterministic.
std::string export_code(const DecisionTree& tree, const CodeExportOptions& options = {});

// Parsed form of emitted controller code.
class ExportedController {
 public:
  // Throws ParseError (with line number) on text outside the emitted subset.
  static ExportedController parse(std::string_view source);

  const std::string& function_name() const noexcept { return function_name_; }
  std::span<const std::string> parameters() const noexcept { return parameters_; }
  std::span<const std::string> actions() const noexcept { return action_names_; }

  // Runs the function body; returns the enum value of the returned constant.
  std::size_t evaluate(std::span<const double> arguments) const;
  const std::string& evaluate_name(std::span<const double> arguments) const;

  // Counts over the parsed body.
  std::size_t if_count() const;
  std::size_t return_count() const;

  struct Statement {
    enum class Kind { branch, result } kind = Kind::result;
    // branch: scale * parameters[parameter] (<= | ==) literal
    double scale = 1.0;
    std::size_t parameter = 0;
    bool equality = false;
    double literal = 0.0;
    std::vector<std::size_t> then_block, else_block;  // statement ids
    std::size_t action = 0;  // result
  };

 private:
  std::string function_name_;
  std::vector<std::string> parameters_;
  std::vector<std::string> action_names_;
  std::vector<std::size_t> action_values_;
  std::vector<Statement> statements_;
  std::vector<std::size_t> body_;
};

// Lower-case feature names and upper-case action names as C identifiers.
std::string c_identifier(std::string_view name);

}  // namespace safetree
