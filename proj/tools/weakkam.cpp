// weakkam: command-line front end. Usage: weakkam <command> [--config PATH] [overrides].

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wkam/cli.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<double> t, s, tol;
    std::optional<std::string> eps, out, domain, u, f, g, input, cost;
    std::vector<std::string> seeds;
};

void add_options(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--t", o.t, "Jensen parameter t");
    sub->add_option("--s", o.s, "Jensen parameter s");
    sub->add_option("--eps", o.eps, "budget expression in x");
    sub->add_option("--tol", o.tol, "equality tolerance");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--domain", o.domain, "circle:a,b,N or interval:a,b,N");
    sub->add_option("--u", o.u, "input function expression");
    sub->add_option("--f", o.f, "upper bound f (ilmanen)");
    sub->add_option("--g", o.g, "lower bound is -g (ilmanen)");
    sub->add_option("--input", o.input, "input CSV (mollify)");
    sub->add_option("--cost", o.cost, "cost spec as inline JSON");
    sub->add_option("--seed", o.seeds, "seed function expression (repeatable)");
}

} // namespace

int main(int argc, char** argv) {
    using wkam::cli::json;
    CLI::App app{"weakkam: discrete weak KAM regularization toolkit"};
    app.set_version_flag("--version", std::string(wkam::cli::version));
    app.require_subcommand(1, 1);
    Overrides o;
    for (const auto& name : wkam::cli::commands()) add_options(app.add_subcommand(name), o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        wkam::cli::print_error(std::cerr, "usage", e.what());
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    wkam::cli::RunConfig rc;
    try {
        if (!o.config.empty()) rc = wkam::cli::load_config(o.config);
        auto set = [&](const char* key, const auto& v) {
            if (v) rc.doc[key] = *v;
        };
        set("t", o.t);
        set("s", o.s);
        set("tol", o.tol);
        set("eps", o.eps);
        // command-line paths are relative to the working directory, config paths to the config
        if (o.out) rc.doc["out"] = std::filesystem::absolute(*o.out).string();
        if (o.input) rc.doc["input"] = std::filesystem::absolute(*o.input).string();
        set("domain", o.domain);
        set("u", o.u);
        set("f", o.f);
        set("g", o.g);
        if (o.cost) rc.doc["cost"] = json::parse(*o.cost);
        if (!o.seeds.empty()) rc.doc["seeds"] = o.seeds;
    } catch (const std::exception& e) {
        wkam::cli::print_error(std::cerr, "invalid_input", e.what());
        return 2;
    }
    return wkam::cli::run(command, rc);
}
