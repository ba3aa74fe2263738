#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ioredux/app.hpp"
#include "ioredux/errors.hpp"
#include "ioredux/version.hpp"

using namespace ioredux;

int main(int argc, char** argv) {
    CLI::App cli{"ioredux: reduced-order input/output planning for parameterized models"};
    cli.set_version_flag("--version", kVersion);
    cli.require_subcommand(1);

    app::SampleOptions sample_opt;
    auto* sample = cli.add_subcommand("sample", "generate the sparse-grid design");
    sample->add_option("--config", sample_opt.config_path, "config file")->required();
    sample->add_option("--out-dir", sample_opt.out_dir, "output directory")->required();
    sample->add_option("--level", sample_opt.level, "override the design level");

    app::EvaluateOptions eval_opt;
    auto* evaluate = cli.add_subcommand("evaluate", "run the model over a design");
    evaluate->add_option("--config", eval_opt.config_path, "config file")->required();
    evaluate->add_option("--design", eval_opt.design_path, "design csv")->required();
    evaluate->add_option("--out", eval_opt.out_path, "snapshot csv to write")->required();
    evaluate->add_option("--jobs", eval_opt.jobs, "parallel model evaluations");

    app::ReduceOptions reduce_opt;
    auto* reduce = cli.add_subcommand("reduce", "build the reduced-order model");
    reduce->add_option("--config", reduce_opt.config_path, "config file")->required();
    reduce->add_option("--design", reduce_opt.design_path, "design csv")->required();
    reduce->add_option("--snapshot", reduce_opt.snapshot_path, "snapshot csv")->required();
    reduce->add_option("--out", reduce_opt.out_path, "rom json to write")->required();
    reduce->add_option("--threshold", reduce_opt.threshold, "override the variance threshold");
    reduce->add_option("--degree", reduce_opt.degree, "override the surrogate total degree");

    app::VerifyOptions verify_opt;
    auto* verify = cli.add_subcommand("verify", "check the reduced directions against the model");
    verify->add_option("--config", verify_opt.config_path, "config file")->required();
    verify->add_option("--rom", verify_opt.rom_path, "rom json")->required();
    verify->add_option("--out", verify_opt.out_path, "verification csv to write")->required();
    verify->add_option("--delta", verify_opt.delta, "override the perturbation step");
    verify->add_option("--jobs", verify_opt.jobs, "parallel model evaluations");

    app::PlanOptions plan_opt;
    auto* plan = cli.add_subcommand("plan", "map output targets to intervention plans");
    plan->add_option("--config", plan_opt.config_path, "config file (required with --evaluate)");
    plan->add_option("--rom", plan_opt.rom_path, "rom json")->required();
    plan->add_option("--targets", plan_opt.targets_path, "targets csv")->required();
    plan->add_option("--out", plan_opt.out_path, "plans csv to write")->required();
    plan->add_flag("--evaluate", plan_opt.evaluate, "run the model at each planned point");
    plan->add_flag("--strict", plan_opt.strict, "fail on reachability warnings");
    plan->add_option("--jobs", plan_opt.jobs, "parallel model evaluations");

    app::ReportOptions report_opt;
    auto* report = cli.add_subcommand("report", "export loadings and directions");
    report->add_option("--rom", report_opt.rom_path, "rom json")->required();
    report->add_option("--out-dir", report_opt.out_dir, "output directory")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e);
    }

    try {
        if (*sample) app::cmd_sample(sample_opt);
        if (*evaluate) app::cmd_evaluate(eval_opt);
        if (*reduce) app::cmd_reduce(reduce_opt);
        if (*verify) {
            if (!app::cmd_verify(verify_opt)) return exit_code::verification;
        }
        if (*plan) {
            if (!app::cmd_plan(plan_opt) && plan_opt.strict) return exit_code::targets;
        }
        if (*report) app::cmd_report(report_opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const EvaluationError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return exit_code::evaluation;
    } catch (const ReductionError& e) {
        std::cerr << "reduction error: " << e.what() << "\n";
        return exit_code::reduction;
    } catch (const VerificationError& e) {
        std::cerr << "verification error: " << e.what() << "\n";
        return exit_code::verification;
    } catch (const TargetsError& e) {
        std::cerr << "targets error: " << e.what() << "\n";
        return exit_code::targets;
    } catch (const ProvenanceError& e) {
        std::cerr << "provenance error: " << e.what() << "\n";
        return exit_code::provenance;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
    return exit_code::ok;
}
