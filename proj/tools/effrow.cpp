// Command-line front end: type-and-effect inference, small-step evaluation,
// derivation checking, and the metatheory property suite.

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "effrow/check.hpp"
#include "effrow/eval.hpp"
#include "effrow/infer.hpp"
#include "effrow/metatheory.hpp"
#include "effrow/parse.hpp"
#include "effrow/print.hpp"

using namespace effrow;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitTypeError = 2;
constexpr int kExitParseError = 3;
constexpr int kExitException = 4;
constexpr int kExitFaulty = 5;
constexpr int kExitFuel = 6;

struct InputOpts {
  std::string path;
  std::string inline_text;
  bool debug_syntax = false;
  bool json_out = false;
};

void add_input_flags(CLI::App* cmd, InputOpts& in) {
  cmd->add_option("input", in.path, "program file (UTF-8)");
  cmd->add_option("-e,--expr", in.inline_text, "inline program text");
  cmd->add_flag("--debug-syntax", in.debug_syntax,
                "accept internal forms: hp {r -> v} e and #r");
  cmd->add_flag("--json", in.json_out, "machine-readable output");
}

std::string read_input(const InputOpts& in) {
  if (!in.inline_text.empty() && !in.path.empty())
    throw std::runtime_error("give either a file or -e, not both");
  if (!in.inline_text.empty()) return in.inline_text;
  if (in.path.empty()) throw std::runtime_error("no input: give a file or -e");
  std::ifstream f(in.path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + in.path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit_error(const InputOpts& in, const std::string& kind,
                const std::string& msg, const SourceSpan* span) {
  if (in.json_out) {
    json j;
    j["diagnostics"] = json::array();
    json d;
    d["kind"] = kind;
    d["message"] = msg;
    if (span) {
      d["line"] = span->line;
      d["column"] = span->column;
    }
    j["diagnostics"].push_back(d);
    std::cout << j.dump() << "\n";
  }
  std::cerr << kind << ": " << msg;
  if (span && span->line > 0)
    std::cerr << " (line " << span->line << ", column " << span->column << ")";
  std::cerr << "\n";
}

int with_program(const InputOpts& in, const std::function<int(const Expr&)>& go) {
  std::string text;
  try {
    text = read_input(in);
  } catch (const std::exception& ex) {
    emit_error(in, "error", ex.what(), nullptr);
    return kExitInternal;
  }
  Expr program;
  try {
    program = parse_expr(text, in.debug_syntax);
  } catch (const parse_error& pe) {
    emit_error(in, "parse error", pe.what(), &pe.span);
    return kExitParseError;
  }
  return go(program);
}

int cmd_infer(const InputOpts& in) {
  return with_program(in, [&](const Expr& program) {
    Session session;
    InferOptions opt;
    opt.allow_internal = in.debug_syntax;
    InferResult r;
    try {
      r = infer(Env{}, program, session, opt);
    } catch (const TypeError& te) {
      emit_error(in, "type error", te.what(), &te.span);
      return kExitTypeError;
    }
    NameTable names;
    Scheme scheme = generalize(Env{}, r.type);
    std::string scheme_text = print_scheme(scheme, names);
    std::string effect_text = print_type(r.effect, names);
    if (in.json_out) {
      json j;
      j["scheme"] = scheme_text;
      j["effect"] = effect_text;
      j["diagnostics"] = json::array();
      std::cout << j.dump() << "\n";
    } else {
      std::cout << scheme_text << "\n";
      std::cout << "effect: " << effect_text << "\n";
    }
    return kExitOk;
  });
}

const char* answer_word(AnswerKind k) {
  switch (k) {
    case AnswerKind::value: return "value";
    case AnswerKind::exception: return "exception";
    case AnswerKind::heap_value: return "heap value";
    case AnswerKind::heap_exception: return "heap exception";
    case AnswerKind::not_answer: return "not an answer";
  }
  return "?";
}

int cmd_eval(const InputOpts& in, long fuel, bool trace, bool unsafe) {
  return with_program(in, [&](const Expr& program) {
    if (!unsafe) {
      Session session;
      InferOptions opt;
      opt.allow_internal = in.debug_syntax;
      try {
        infer(Env{}, program, session, opt);
      } catch (const TypeError& te) {
        emit_error(in, "type error", te.what(), &te.span);
        return kExitTypeError;
      }
    }
    TraceFn tracer;
    if (trace && !in.json_out)
      tracer = [](long n, Rule r, const Expr& e) {
        NameTable names;
        std::cout << "step " << n << ": (" << rule_name(r) << ") "
                  << print_expr(e, names) << "\n";
      };
    EvalOutcome out = evaluate(program, fuel, tracer);
    NameTable names;
    std::string term_text = print_expr(out.term, names);
    if (in.json_out) {
      json j;
      j["diagnostics"] = json::array();
      j["steps"] = out.steps;
      switch (out.kind) {
        case EvalOutcome::Kind::finished:
          j["answer"] = term_text;
          j["answer_kind"] = answer_word(out.answer);
          break;
        case EvalOutcome::Kind::faulty:
          j["faulty"] = faulty_name(out.reason);
          j["at"] = term_text;
          break;
        case EvalOutcome::Kind::fuel_exhausted:
          j["fuel_exhausted"] = true;
          j["last"] = term_text;
          break;
        case EvalOutcome::Kind::stuck:
          j["stuck"] = true;
          j["at"] = term_text;
          break;
      }
      std::cout << j.dump() << "\n";
    }
    switch (out.kind) {
      case EvalOutcome::Kind::finished:
        if (!in.json_out) {
          std::cout << term_text << "\n";
          std::cout << answer_word(out.answer) << " in " << out.steps
                    << " steps\n";
        }
        return (out.answer == AnswerKind::exception ||
                out.answer == AnswerKind::heap_exception)
                   ? kExitException
                   : kExitOk;
      case EvalOutcome::Kind::faulty:
        if (!in.json_out)
          std::cerr << "faulty: " << faulty_name(out.reason) << " at "
                    << term_text << "\n";
        return kExitFaulty;
      case EvalOutcome::Kind::fuel_exhausted:
        if (!in.json_out)
          std::cerr << "fuel exhausted after " << out.steps << " steps\n";
        return kExitFuel;
      case EvalOutcome::Kind::stuck:
        if (!in.json_out) std::cerr << "stuck at " << term_text << "\n";
        return kExitInternal;
    }
    return kExitInternal;
  });
}

int cmd_check(const InputOpts& in) {
  return with_program(in, [&](const Expr& program) {
    Session session;
    InferOptions opt;
    opt.allow_internal = in.debug_syntax;
    InferResult r;
    try {
      r = infer(Env{}, program, session, opt);
    } catch (const TypeError& te) {
      emit_error(in, "type error", te.what(), &te.span);
      return kExitTypeError;
    }
    NameTable names;
    Scheme scheme = generalize(Env{}, r.type);
    std::string scheme_text = print_scheme(scheme, names);
    std::string effect_text = print_type(r.effect, names);
    try {
      check(Env{}, desugar_binds(program), r.type, r.effect, session, r.elab);
    } catch (const check_error& ce) {
      emit_error(in, "check error",
                 std::string("inference and the declarative rules disagree: ") +
                     ce.what(),
                 nullptr);
      return kExitInternal;
    }
    if (in.json_out) {
      json j;
      j["scheme"] = scheme_text;
      j["effect"] = effect_text;
      j["validated"] = true;
      j["diagnostics"] = json::array();
      std::cout << j.dump() << "\n";
    } else {
      std::cout << scheme_text << "\n";
      std::cout << "effect: " << effect_text << "\n";
      std::cout << "derivation validated\n";
    }
    return kExitOk;
  });
}

int cmd_suite(int n, unsigned long long seed, int depth, const std::string& allow,
              long fuel, bool json_out, const std::string& out_path) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.max_depth = depth;
  if (!allow.empty()) {
    cfg.allow_exn = allow.find("exn") != std::string::npos;
    cfg.allow_st = allow.find("st") != std::string::npos;
    cfg.allow_div = allow.find("div") != std::string::npos;
  }
  SuiteOptions opts;
  opts.fuel = fuel;
  SuiteReport report = run_metatheory_suite(n, cfg, opts);
  std::string rendered;
  if (json_out) {
    json j;
    j["properties"] = json::array();
    for (const PropertyReport& p : report.properties) {
      json pj;
      pj["name"] = p.name;
      pj["checked"] = p.checked;
      pj["violations"] = p.violations;
      pj["counterexamples"] = p.counterexamples;
      j["properties"].push_back(pj);
    }
    j["terms_generated"] = report.terms_generated;
    j["max_steps"] = report.max_steps_seen;
    j["ok"] = report.ok();
    rendered = j.dump() + "\n";
  } else {
    rendered = report_to_text(report);
  }
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    f << rendered;
  } else {
    std::cout << rendered;
  }
  return report.ok() ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"row-polymorphic effect types: inference, evaluation, checking"};
  app.require_subcommand(1);

  InputOpts infer_in;
  CLI::App* infer_cmd =
      app.add_subcommand("infer", "infer the principal type and effect");
  add_input_flags(infer_cmd, infer_in);

  InputOpts eval_in;
  long fuel = 100000;
  bool trace = false;
  bool unsafe = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate to an answer");
  add_input_flags(eval_cmd, eval_in);
  eval_cmd->add_option("--fuel", fuel, "maximum number of reduction steps");
  eval_cmd->add_flag("--trace", trace, "print one rule-tagged line per step");
  eval_cmd->add_flag("--unsafe", unsafe, "skip the type check before evaluation");

  InputOpts check_in;
  CLI::App* check_cmd = app.add_subcommand(
      "check", "infer, then validate the derivation against the declarative rules");
  add_input_flags(check_cmd, check_in);

  int n = 100;
  unsigned long long seed = 1;
  int depth = 5;
  std::string allow;
  long suite_fuel = 100000;
  bool suite_json = false;
  std::string suite_out;
  CLI::App* suite_cmd =
      app.add_subcommand("suite", "run the metatheory property suite");
  suite_cmd->add_option("--n", n, "number of generated terms");
  suite_cmd->add_option("--seed", seed, "corpus seed");
  suite_cmd->add_option("--depth", depth, "maximum generation depth (<= 8)");
  suite_cmd->add_option("--allow", allow,
                        "comma list of effect features: exn,st,div");
  suite_cmd->add_option("--fuel", suite_fuel, "evaluation fuel per term");
  suite_cmd->add_flag("--json", suite_json, "machine-readable report");
  suite_cmd->add_option("--out", suite_out, "write the report to a file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (infer_cmd->parsed()) return cmd_infer(infer_in);
    if (eval_cmd->parsed()) return cmd_eval(eval_in, fuel, trace, unsafe);
    if (check_cmd->parsed()) return cmd_check(check_in);
    if (suite_cmd->parsed())
      return cmd_suite(n, seed, depth, allow, suite_fuel, suite_json, suite_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
