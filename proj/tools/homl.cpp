// homl: batch front end for finite presheaf models of higher-order modal logic.

#include <iostream>

#include <CLI11.hpp>

#include <homl/cli.hpp>

int main(int argc, char** argv) {
  using homl::cli::Format;
  homl::cli::RunConfig cfg;
  std::string format = "text";
  std::size_t guard = 0;

  CLI::App app{"Finite presheaf models of higher-order modal logic"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "structured"}));
  app.add_option("--jobs,-j", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--size-guard", guard, "Arrow cap for categories (default 64, or HOML_SIZE_GUARD)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timing", cfg.timing, "Report runtimes");
  app.add_flag("--allow-unfaithful", cfg.allow_unfaithful, "Accept frames whose initial map is not monic");
  app.add_option("--seed", cfg.seed, "Seed for generated formula corpora");
  app.add_option("--model", cfg.model_name, "Model to use when a file declares several");

  auto* validate = app.add_subcommand("validate", "Validate model, frame, category and theory files");
  validate->add_option("files", cfg.paths, "Files to validate")->required();

  auto* check = app.add_subcommand("check", "Check every sequent of a theory in a model");
  check->add_option("model", cfg.paths, "Model file, then theory file")->required()->expected(2);

  std::string model_path;
  auto* force = app.add_subcommand("force", "Evaluate a formula by the forcing clauses at a world");
  force->add_option("model", model_path, "Model file")->required();
  force->add_option("world", cfg.world, "Object of the base")->required();
  force->add_option("formula", cfg.term, "Formula")->required();
  force->add_option("bindings", cfg.bindings, "Free variables as name[:type]=element@object");
  force->add_flag("--trace", cfg.trace, "Print the clause trace");

  auto* eval = app.add_subcommand("eval", "Print the component tables of a term's interpretation");
  eval->add_option("model", model_path, "Model file")->required();
  eval->add_option("term", cfg.term, "Term")->required();
  eval->add_option("--context", cfg.context, "Context, as in \"x:G, f:G^G\"");

  app.add_subcommand("paper-checks", "Run every built-in check and report against its expectation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return homl::cli::kInputError;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.format = format == "structured" ? Format::Structured : Format::Text;
  if (guard) cfg.size_guard = guard;
  if (!model_path.empty()) cfg.paths = {model_path};

  auto o = homl::cli::run(cfg);
  std::cout << o.out;
  std::cerr << o.err;
  return o.code;
}
