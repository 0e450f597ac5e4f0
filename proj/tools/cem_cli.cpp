#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cem/bench.hpp"
#include "cem/errors.hpp"
#include "cem/model.hpp"
#include "cem/optimize.hpp"

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return buffer.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cem::ModelError("cannot open input file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cem::ModelError("cannot open output file '" + path + "'");
    out << content;
}

struct SolverFlags {
    int t_max = -1;
    double eta_min = -1.0;
    double epsilon = -1.0;
    int max_iter = -1;
    std::string algo;
    std::string grad;
    double fd_step = -1.0;
    std::string fd_scheme;
    std::string aux;
    unsigned seed = 0;  // reserved for stochastic generators; all current runs are deterministic
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
    cmd->add_option("--tmax", flags.t_max, "Maximum form-finding sweeps");
    cmd->add_option("--eta", flags.eta_min, "Equilibrium distance threshold");
    cmd->add_option("--eps", flags.epsilon, "Optimization convergence threshold");
    cmd->add_option("--max-iter", flags.max_iter, "Maximum optimization iterations");
    cmd->add_option("--algo", flags.algo, "Optimizer: gd or lbfgs")
        ->check(CLI::IsMember({"gd", "lbfgs"}));
    cmd->add_option("--grad", flags.grad, "Gradient mode: ad or fd")
        ->check(CLI::IsMember({"ad", "fd"}));
    cmd->add_option("--fd-step", flags.fd_step, "Finite-difference step size");
    cmd->add_option("--fd-scheme", flags.fd_scheme, "Finite-difference scheme: forward or central")
        ->check(CLI::IsMember({"forward", "central"}));
    cmd->add_option("--aux", flags.aux, "Auxiliary trail insertion: auto or off")
        ->check(CLI::IsMember({"auto", "off"}));
    cmd->add_option("--seed", flags.seed, "Random seed (reserved; generators are deterministic)");
}

void apply_flags(cem::ModelDocument& doc, const SolverFlags& flags) {
    if (flags.t_max >= 0) doc.solver.t_max = flags.t_max;
    if (flags.eta_min >= 0.0) doc.solver.eta_min = flags.eta_min;
    if (flags.epsilon >= 0.0) {
        doc.opt.epsilon = flags.epsilon;
        doc.constraint_epsilon = flags.epsilon;
    }
    if (flags.max_iter >= 0) doc.opt.max_iter = flags.max_iter;
    if (flags.algo == "gd") doc.opt.algorithm = cem::Algorithm::GradientDescent;
    if (flags.algo == "lbfgs") doc.opt.algorithm = cem::Algorithm::Lbfgs;
    if (flags.grad == "ad") doc.opt.grad = cem::GradMode::Ad;
    if (flags.grad == "fd") doc.opt.grad = cem::GradMode::Fd;
    if (flags.fd_step > 0.0) doc.opt.fd_step = flags.fd_step;
    if (flags.fd_scheme == "forward") doc.opt.fd_scheme = cem::FdScheme::Forward;
    if (flags.fd_scheme == "central") doc.opt.fd_scheme = cem::FdScheme::Central;
    if (flags.aux == "auto") doc.auto_auxiliary = true;
    if (flags.aux == "off") doc.auto_auxiliary = false;
}

cem::ExportFormat format_from(const std::string& name) {
    if (name == "json") return cem::ExportFormat::Json;
    if (name == "svg") return cem::ExportFormat::Svg;
    if (name == "obj") return cem::ExportFormat::Obj;
    throw cem::ModelError("unknown export format '" + name + "'");
}

std::vector<int> parse_sizes(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    if (out.empty()) throw cem::ModelError("--sizes must list at least one size");
    return out;
}

int wheel_exponent(int sides) {
    for (int n = 2; n <= 8; ++n)
        if ((1 << n) == sides) return n;
    throw cem::ModelError("wheel size must be a power of two between 4 and 256, got " +
                          std::to_string(sides));
}

int run_validate(const std::string& input, const SolverFlags& flags) {
    cem::ModelDocument doc = cem::parse_document(read_input(input));
    apply_flags(doc, flags);
    const cem::TopologyDiagram base = cem::build_topology(doc.topology);
    cem::TrailAssignment assignment;
    try {
        assignment = cem::assign_trails(base, doc.auto_auxiliary);
    } catch (const cem::TopologyError& e) {
        // Overlapping and unassigned nodes both break the membership rule.
        std::cout << "invalid\n";
        std::cout << "rule 1: " << e.what() << "\n";
        return 1;
    }
    const cem::ValidityReport report =
        cem::validate_topology(assignment.diagram, assignment.trails);
    if (report.is_valid) {
        std::cout << "valid\n";
        std::cout << "trails: " << assignment.trails.size() << "\n";
        return 0;
    }
    std::cout << "invalid\n";
    for (const cem::Violation& v : report.violations)
        std::cout << "rule " << v.rule << " (" << v.subject << "): " << v.message << "\n";
    return 1;
}

int run_formfind(const std::string& input, const std::string& output, const std::string& format,
                 const std::string& plane, const SolverFlags& flags) {
    cem::ModelDocument doc = cem::parse_document(read_input(input));
    apply_flags(doc, flags);
    const cem::Problem problem = cem::compile_model(doc);
    const cem::EquilibriumState<double> state =
        cem::form_find(problem.diagram, problem.trails, problem.sequences, problem.x_template,
                       problem.solver);
    const cem::SolvedModel solved =
        cem::make_solved_model(problem.diagram, state, problem.x_template);
    cem::ExportOptions options;
    options.plane = plane;
    write_output(output, cem::export_form(solved, format_from(format), options));
    return 0;
}

int run_solve(const std::string& input, const std::string& output, const std::string& format,
              const std::string& plane, bool strict, const SolverFlags& flags) {
    cem::ModelDocument doc = cem::parse_document(read_input(input));
    apply_flags(doc, flags);
    const cem::Problem problem = cem::compile_model(doc);
    const auto [state, report] = cem::solve(problem);
    const cem::DesignParameters<double> x_final = cem::unpack<double>(
        std::span<const double>(report.s_final), problem.map, problem.x_template, problem.diagram);
    const cem::SolvedModel solved = cem::make_solved_model(problem.diagram, state, x_final);
    cem::ExportOptions options;
    options.plane = plane;
    options.report = &report;
    write_output(output, cem::export_form(solved, format_from(format), options));
    if (strict && !report.converged) {
        std::cerr << "did not converge: L=" << report.L_final
                  << " grad_norm=" << report.grad_norm_final << "\n";
        return 2;
    }
    return 0;
}

int run_bench(const std::string& family, const std::string& sizes_csv, const std::string& grads_csv,
              const std::string& report_path, const SolverFlags& flags) {
    cem::BenchConfig config;
    config.family = family;
    for (int size : parse_sizes(sizes_csv))
        config.sizes.push_back(family == "wheel" ? wheel_exponent(size) : size);
    config.grads.clear();
    std::stringstream ss(grads_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "ad") config.grads.push_back(cem::GradMode::Ad);
        else if (item == "fd") config.grads.push_back(cem::GradMode::Fd);
        else throw cem::ModelError("--grad entries must be ad or fd");
    }
    if (config.grads.empty()) throw cem::ModelError("--grad must list at least one mode");
    if (flags.max_iter >= 0) config.max_iter = flags.max_iter;
    if (flags.epsilon >= 0.0) config.epsilon = flags.epsilon;
    if (flags.fd_step > 0.0) config.fd_step = flags.fd_step;
    if (flags.fd_scheme == "central") config.fd_scheme = cem::FdScheme::Central;
    if (flags.algo == "gd") config.algorithm = cem::Algorithm::GradientDescent;

    const cem::BenchmarkReport report = cem::run_benchmark(config);
    write_output(report_path, cem::to_csv(report));
    return 0;
}

int run_export(const std::string& input, const std::string& output, const std::string& format,
               const std::string& plane) {
    const cem::SolvedModel solved = cem::parse_state(read_input(input));
    cem::ExportOptions options;
    options.plane = plane;
    write_output(output, cem::export_form(solved, format_from(format), options));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained form-finding of tension-compression structures"};
    app.require_subcommand(1);

    SolverFlags flags;
    std::string input = "-";
    std::string output = "-";
    std::string format = "json";
    std::string plane = "xz";
    bool strict = false;

    CLI::App* validate = app.add_subcommand("validate", "Check topology validity");
    validate->add_option("input", input, "Model JSON file ('-' for stdin)");
    add_solver_flags(validate, flags);

    CLI::App* formfind = app.add_subcommand("formfind", "Run one form-finding solve");
    formfind->add_option("input", input, "Model JSON file ('-' for stdin)");
    formfind->add_option("-o,--output", output, "Output file ('-' for stdout)");
    formfind->add_option("--format", format, "Output format: json, svg or obj")
        ->check(CLI::IsMember({"json", "svg", "obj"}));
    formfind->add_option("--plane", plane, "SVG projection plane: xy, xz or yz")
        ->check(CLI::IsMember({"xy", "xz", "yz"}));
    add_solver_flags(formfind, flags);

    CLI::App* solve = app.add_subcommand("solve", "Run constrained optimization");
    solve->add_option("input", input, "Model JSON file ('-' for stdin)");
    solve->add_option("-o,--output", output, "Output file ('-' for stdout)");
    solve->add_option("--format", format, "Output format: json, svg or obj")
        ->check(CLI::IsMember({"json", "svg", "obj"}));
    solve->add_option("--plane", plane, "SVG projection plane: xy, xz or yz")
        ->check(CLI::IsMember({"xy", "xz", "yz"}));
    solve->add_flag("--strict", strict, "Exit 2 when the optimizer does not converge");
    add_solver_flags(solve, flags);

    std::string family;
    std::string sizes_csv;
    std::string grads_csv = "ad";
    std::string report_path = "-";
    CLI::App* bench = app.add_subcommand("bench", "Run benchmark sweeps");
    bench->add_option("family", family, "Benchmark family: wheel or bridge")->required();
    bench->add_option("--sizes", sizes_csv, "Comma-separated sizes (wheel: sides, bridge: hangers)")
        ->required();
    bench->add_option("--grad", grads_csv, "Comma-separated gradient modes (ad, fd)");
    bench->add_option("--report", report_path, "CSV output file ('-' for stdout)");
    bench->add_option("--max-iter", flags.max_iter, "Iteration budget per solve");
    bench->add_option("--eps", flags.epsilon, "Optimization convergence threshold");
    bench->add_option("--fd-step", flags.fd_step, "Finite-difference step size");
    bench->add_option("--fd-scheme", flags.fd_scheme, "Finite-difference scheme: forward or central")
        ->check(CLI::IsMember({"forward", "central"}));
    bench->add_option("--algo", flags.algo, "Optimizer: gd or lbfgs")
        ->check(CLI::IsMember({"gd", "lbfgs"}));
    bench->add_option("--seed", flags.seed, "Random seed (reserved; generators are deterministic)");

    CLI::App* exporter = app.add_subcommand("export", "Convert a solved state file");
    exporter->add_option("input", input, "State JSON file ('-' for stdin)");
    exporter->add_option("-o,--output", output, "Output file ('-' for stdout)");
    exporter->add_option("--format", format, "Output format: json, svg or obj")
        ->check(CLI::IsMember({"json", "svg", "obj"}));
    exporter->add_option("--plane", plane, "SVG projection plane: xy, xz or yz")
        ->check(CLI::IsMember({"xy", "xz", "yz"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return run_validate(input, flags);
        if (formfind->parsed()) return run_formfind(input, output, format, plane, flags);
        if (solve->parsed()) return run_solve(input, output, format, plane, strict, flags);
        if (bench->parsed()) return run_bench(family, sizes_csv, grads_csv, report_path, flags);
        if (exporter->parsed()) return run_export(input, output, format, plane);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
