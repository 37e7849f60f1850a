#include "conetomo/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "conetomo/errors.hpp"
#include "conetomo/geometry.hpp"
#include "conetomo/grid.hpp"
#include "conetomo/microlocal.hpp"
#include "conetomo/operator.hpp"
#include "conetomo/phantom.hpp"
#include "conetomo/profile.hpp"
#include "conetomo/reconstruction.hpp"
#include "format.hpp"

namespace conetomo {

namespace {

double decimal(const std::string& text, const std::string& flag)
{
    // Decimal literals only: no hex, no inf/nan, no separators.
    const bool plain = !text.empty() && std::all_of(text.begin(), text.end(), [](char ch) {
        return (ch >= '0' && ch <= '9') || ch == '.' || ch == '-' || ch == '+' || ch == 'e' || ch == 'E';
    });
    try {
        if (plain)
            return detail::parse_number(text);
    }
    catch (const DomainError&) {
    }
    throw CLI::ValidationError(flag, "expected a decimal number, got '" + text + "'");
}

std::size_t count(const std::string& text, const std::string& flag)
{
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw CLI::ValidationError(flag, "expected a nonnegative integer, got '" + text + "'");
    return v;
}

std::vector<double> decimal_list(const std::string& text, const std::string& flag, std::size_t n)
{
    std::vector<double> out;
    std::string_view rest = text;
    while (true) {
        const auto comma = rest.find(',');
        out.push_back(decimal(std::string(rest.substr(0, comma)), flag));
        if (comma == std::string_view::npos)
            break;
        rest.remove_prefix(comma + 1);
    }
    if (out.size() != n)
        throw CLI::ValidationError(flag, "expected " + std::to_string(n) + " comma-separated numbers");
    return out;
}

CLI::Option* add_decimal(CLI::App* app, const std::string& name, double& target, const std::string& desc)
{
    const std::string flag = name.substr(0, name.find(','));
    return app->add_option_function<std::string>(
        name, [&target, flag](const std::string& s) { target = decimal(s, flag); }, desc)
        ->type_name("NUM");
}

CLI::Option* add_decimal(CLI::App* app, const std::string& name, std::optional<double>& target,
                         const std::string& desc)
{
    const std::string flag = name.substr(0, name.find(','));
    return app->add_option_function<std::string>(
        name, [&target, flag](const std::string& s) { target = decimal(s, flag); }, desc)
        ->type_name("NUM");
}

template <class T>
CLI::Option* add_count(CLI::App* app, const std::string& name, T& target, const std::string& desc)
{
    const std::string flag = name.substr(0, name.find(','));
    return app->add_option_function<std::string>(
        name, [&target, flag](const std::string& s) { target = count(s, flag); }, desc)
        ->type_name("INT");
}

std::string preset_table()
{
    std::ostringstream os;
    os << "Presets:\n";
    for (const auto& p : experiment_presets()) {
        const ScanGeometry& g = p.geometry;
        using detail::format_number;
        os << "  " << p.name << ": profile " << p.profile << ", image [" << format_number(g.image.x_min) << ","
           << format_number(g.image.x_max) << "]x[" << format_number(g.image.y_min) << ","
           << format_number(g.image.y_max) << "], E in (0," << format_number(g.b) << ") sampled from "
           << format_number(g.a) << ", x0 in [" << format_number(-g.c) << "," << format_number(g.c) << "], "
           << g.nx << "x" << g.ny << " image, " << g.n_e << "x" << g.n_x0 << " sinogram\n";
    }
    return os.str();
}

struct SetupOptions {
    std::string preset = "ex1-compton";
    std::string profile;
    std::optional<std::size_t> nx, ny, ne, nx0;
    std::optional<double> quad_step;
    int threads = 0;
    std::string matrix_cache;

    void attach(CLI::App* app, bool with_operator)
    {
        app->add_option("--preset", preset, "experiment preset (default ex1-compton)")
            ->check(CLI::IsMember([] {
                std::vector<std::string> names;
                for (const auto& p : experiment_presets())
                    names.push_back(p.name);
                return names;
            }()));
        app->add_option("--profile", profile,
                        "curve profile: compton, bragg, monomial:<a>, sinusoid:<eps>, bragg-offset:<x2>");
        add_count(app, "--nx", nx, "image columns");
        add_count(app, "--ny", ny, "image rows");
        add_count(app, "--ne", ne, "sinogram E bins");
        add_count(app, "--nx0", nx0, "sinogram x0 bins");
        if (!with_operator)
            return;
        add_decimal(app, "--quad-step", quad_step, "curve quadrature step (default half a pixel)");
        add_count(app, "--threads", threads, "worker threads for the operator build (0 = default)");
        app->add_option("--matrix-cache", matrix_cache, "load/store the system matrix here");
    }

    const ExperimentPreset& base() const { return find_preset(preset); }

    CurveProfile curve() const { return parse_profile(profile.empty() ? base().profile : profile); }

    ScanGeometry geometry() const
    {
        ScanGeometry g = base().geometry;
        if (nx)
            g.nx = *nx;
        if (ny)
            g.ny = *ny;
        if (ne)
            g.n_e = *ne;
        if (nx0)
            g.n_x0 = *nx0;
        if (quad_step)
            g.quadrature_step = *quad_step;
        g.validate();
        return g;
    }

    PhantomSpec phantom(const std::string& text, bool disc_default = false) const
    {
        const ScanGeometry g = geometry();
        const double default_hw = 0.0075 * (g.image.x_max - g.image.x_min);
        const std::string& spec = text.empty() ? (disc_default ? base().disc_phantom : base().delta_phantom) : text;
        return parse_phantom(spec, default_hw);
    }

    SystemMatrix matrix(std::ostream& err) const
    {
        const CurveProfile p = curve();
        const ScanGeometry g = geometry();
        const std::string fp = g.fingerprint(p);
        if (!matrix_cache.empty() && std::filesystem::exists(matrix_cache)) {
            try {
                return load_system_matrix(matrix_cache, fp);
            }
            catch (const FormatError& e) {
                err << "note: rebuilding matrix cache (" << e.what() << ")\n";
            }
        }
        SystemMatrix m = build_system_matrix(p, g, threads);
        if (!matrix_cache.empty())
            save_system_matrix(m, matrix_cache);
        return m;
    }
};

void write_residuals(const std::vector<double>& history, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << "iteration,residual\n";
    for (std::size_t k = 0; k < history.size(); ++k)
        out << k << ',' << detail::format_number(history[k]) << '\n';
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Generalized cone (broken-ray) Radon transform: simulation, reconstruction and microlocal analysis",
                 "conetomo"};
    app.require_subcommand(1);
    app.footer(preset_table());

    std::function<void()> action;

    // simulate
    SetupOptions sim_setup;
    std::string sim_phantom, sim_out;
    auto* sim = app.add_subcommand("simulate", "forward-project a phantom into a sinogram");
    sim_setup.attach(sim, true);
    sim->add_option("--phantom", sim_phantom, "delta:cx,cy[,hw] or disc:cx,cy,r (default: preset delta)");
    sim->add_option("-o,--out", sim_out, "output sinogram (CRGRID)")->required();
    sim->callback([&] {
        action = [&] {
            const ScanGeometry g = sim_setup.geometry();
            const ImageGrid f = rasterize(sim_setup.phantom(sim_phantom), g.image_shape());
            const Sinogram s = forward(sim_setup.matrix(err), f);
            write_grid(s, sim_out);
            out << "wrote " << sim_out << " (" << s.nx() << " E x " << s.ny() << " x0)\n";
        };
    });

    // reconstruct
    SetupOptions rec_setup;
    std::string rec_method, rec_in, rec_out, rec_boundary = "zero", rec_residuals;
    ReconstructionConfig rec_cfg;
    std::size_t rec_iters = static_cast<std::size_t>(rec_cfg.landweber_iters);
    std::size_t rec_mask = 0;
    auto* rec = app.add_subcommand("reconstruct", "Lambda filtered backprojection or Landweber iteration");
    rec_setup.attach(rec, true);
    rec->add_option("--method", rec_method, "fbp or landweber")->required()->check(CLI::IsMember({"fbp", "landweber"}));
    rec->add_option("-i,--in", rec_in, "input sinogram (CRGRID)")->required();
    rec->add_option("-o,--out", rec_out, "output image (CRGRID)")->required();
    add_count(rec, "--iters", rec_iters, "Landweber iterations (default 200)");
    add_decimal(rec, "--step", rec_cfg.step, "Landweber step (default 1/(1.1 |M|)^2)");
    rec->add_option("--fbp-boundary", rec_boundary, "d2/dE2 boundary rows: zero or oneside")
        ->check(CLI::IsMember({"zero", "oneside"}));
    rec->add_option("--residual-csv", rec_residuals, "write the Landweber residual history here");
    add_count(rec, "--mask-central", rec_mask, "zero this many image columns nearest x1 = 0");
    rec->callback([&] {
        action = [&] {
            const Sinogram s = read_sinogram(rec_in);
            const SystemMatrix m = rec_setup.matrix(err);
            const ScanGeometry g = rec_setup.geometry();
            rec_cfg.landweber_iters = static_cast<int>(rec_iters);
            rec_cfg.fbp_boundary = rec_boundary == "oneside" ? BoundaryMode::OneSided : BoundaryMode::ZeroPad;
            ImageGrid f = g.make_image();
            if (rec_method == "fbp") {
                f = lambda_fbp(m, s, rec_cfg.fbp_boundary);
            }
            else {
                LandweberResult r = landweber(m, s, rec_cfg);
                if (r.divergence_warning)
                    err << "warning: step " << detail::format_number(r.step) << " exceeds 2/|M|^2; iteration may diverge\n";
                out << "step=" << detail::format_number(r.step) << "\n"
                    << "final_residual=" << detail::format_number(r.residual_history.back()) << "\n";
                if (!rec_residuals.empty())
                    write_residuals(r.residual_history, rec_residuals);
                f = std::move(r.image);
            }
            if (rec_mask > 0)
                zero_central_columns(f, 0.0, rec_mask);
            write_grid(f, rec_out);
            out << "wrote " << rec_out << "\n";
        };
    });

    // bolker
    SetupOptions bol_setup;
    double bol_rmin = 0.01, bol_rmax = 30.0;
    std::size_t bol_samples = 4000;
    std::string bol_format = "text";
    auto* bol = app.add_subcommand("bolker", "check the Bolker condition g' != 0 for a curve profile");
    bol_setup.attach(bol, false);
    add_decimal(bol, "--r-min", bol_rmin, "lower end of the radius range (default 0.01)");
    add_decimal(bol, "--r-max", bol_rmax, "upper end of the radius range (default 30)");
    add_count(bol, "--samples", bol_samples, "sample count (default 4000)");
    bol->add_option("--format", bol_format, "text or kv")->check(CLI::IsMember({"text", "kv"}));
    bol->callback([&] {
        action = [&] {
            const BolkerReport r = check_bolker(bol_setup.curve(), bol_rmin, bol_rmax, bol_samples);
            out << (bol_format == "kv" ? r.to_key_values() : r.to_text());
        };
    });

    // artifacts
    SetupOptions art_setup;
    std::string art_phantom, art_csv, art_mask;
    std::size_t art_x0 = 4000, art_wf = 720, art_dilate = 1;
    auto* art = app.add_subcommand("artifacts", "predict reconstruction artifacts from non-injective g");
    art_setup.attach(art, false);
    art->add_option("--phantom", art_phantom, "delta:cx,cy[,hw] or disc:cx,cy,r (default: preset delta)");
    add_count(art, "--x0-samples", art_x0, "x0 sweep size for point sources (default 4000)");
    add_count(art, "--wavefront-samples", art_wf, "boundary normals for discs (default 720)");
    add_count(art, "--dilate", art_dilate, "mask dilation in pixels (default 1)");
    art->add_option("--csv", art_csv, "artifact point CSV");
    art->add_option("--mask", art_mask, "artifact mask image (CRGRID)");
    art->callback([&] {
        action = [&] {
            const ScanGeometry g = art_setup.geometry();
            const ArtifactReport r =
                predict_artifacts(art_setup.curve(), g, art_setup.phantom(art_phantom), art_x0, art_wf);
            out << "artifact_points=" << r.point_count() << "\n";
            if (!art_csv.empty())
                write_artifact_csv(r, art_csv);
            if (!art_mask.empty())
                write_grid(dilate_mask(r.mask, art_dilate), art_mask);
        };
    });

    // coverage
    SetupOptions cov_setup;
    std::string cov_point, cov_out;
    std::size_t cov_angles = 360;
    auto* cov = app.add_subcommand("coverage", "visible covector directions at one image point");
    cov_setup.attach(cov, false);
    cov->add_option("--point", cov_point, "x1,x2")->required();
    add_count(cov, "--angles", cov_angles, "directions on the half circle (default 360)");
    cov->add_option("-o,--out", cov_out, "coverage CSV");
    cov->callback([&] {
        action = [&] {
            const auto xy = decimal_list(cov_point, "--point", 2);
            const auto samples = coverage_map(cov_setup.curve(), cov_setup.geometry(), {xy[0], xy[1]}, cov_angles);
            out << "visible_degrees=" << detail::format_number(visible_angular_measure(samples) * 180.0 / std::numbers::pi)
                << "\n";
            if (!cov_out.empty())
                write_coverage_csv(samples, cov_out);
        };
    });

    // appendix-a
    double app_x1max = 3.0, app_fd = CurveProfile::kDefaultFdStep;
    std::size_t app_n1 = 300, app_n2 = 200;
    std::string app_out;
    auto* apx = app.add_subcommand("appendix-a", "scan h_B' for off-centre Bragg curves on (0,x1max]x(-1,1)");
    add_decimal(apx, "--x1-max", app_x1max, "upper x1 (default 3)");
    add_count(apx, "--n1", app_n1, "x1 samples (default 300)");
    add_count(apx, "--n2", app_n2, "x2 samples (default 200)");
    add_decimal(apx, "--fd-step", app_fd, "finite-difference step (default 1e-4)");
    apx->add_option("-o,--out", app_out, "h_B' grid (CRGRID)");
    apx->callback([&] {
        action = [&] {
            const BraggOffsetScan scan = bragg_offset_bolker_scan(app_x1max, app_n1, app_n2, app_fd);
            out << "min_h_prime=" << detail::format_number(scan.min_h_prime) << "\n";
            if (!app_out.empty())
                write_grid(scan.grid, app_out);
        };
    });

    // phantom
    SetupOptions ph_setup;
    std::string ph_spec, ph_out, ph_wf_csv;
    std::size_t ph_wf = 720;
    auto* ph = app.add_subcommand("phantom", "rasterise a phantom on the preset image grid");
    ph_setup.attach(ph, false);
    ph->add_option("--phantom", ph_spec, "delta:cx,cy[,hw] or disc:cx,cy,r")->required();
    ph->add_option("-o,--out", ph_out, "output image (CRGRID)")->required();
    ph->add_option("--wavefront-csv", ph_wf_csv, "also write wavefront samples x1,x2,xi1,xi2");
    add_count(ph, "--wavefront-samples", ph_wf, "number of wavefront samples (default 720)");
    ph->callback([&] {
        action = [&] {
            const PhantomSpec spec = ph_setup.phantom(ph_spec);
            write_grid(rasterize(spec, ph_setup.geometry().image_shape()), ph_out);
            out << "wrote " << ph_out << "\n";
            if (ph_wf_csv.empty())
                return;
            std::ofstream csv(ph_wf_csv);
            if (!csv)
                throw IoError("cannot open '" + ph_wf_csv + "' for writing");
            using detail::format_number;
            csv << "x1,x2,xi1,xi2\n";
            for (const auto& w : wavefront_samples(spec, ph_wf))
                csv << format_number(w.x.x1) << ',' << format_number(w.x.x2) << ',' << format_number(w.xi.xi1) << ','
                    << format_number(w.xi.xi2) << '\n';
            if (!csv)
                throw IoError("failed writing '" + ph_wf_csv + "'");
        };
    });

    // export-pgm
    std::string pgm_in, pgm_out, pgm_clip;
    bool pgm_csv = false;
    auto* pgm = app.add_subcommand("export-pgm", "render a CRGRID file as 16-bit PGM (or CSV)");
    pgm->add_option("-i,--in", pgm_in, "input grid (CRGRID)")->required();
    pgm->add_option("-o,--out", pgm_out, "output file")->required();
    pgm->add_option("--clip", pgm_clip, "lo,hi display range");
    pgm->add_flag("--csv", pgm_csv, "write CSV instead of PGM");
    pgm->callback([&] {
        action = [&] {
            std::optional<std::pair<double, double>> clip;
            if (!pgm_clip.empty()) {
                const auto v = decimal_list(pgm_clip, "--clip", 2);
                clip = std::pair{v[0], v[1]};
            }
            std::visit(
                [&](const auto& grid) {
                    if (pgm_csv)
                        export_csv(grid, pgm_out);
                    else
                        export_pgm(grid, pgm_out, clip);
                },
                read_grid(pgm_in));
            out << "wrote " << pgm_out << "\n";
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }

    try {
        if (action)
            action();
        return kExitOk;
    }
    catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

}  // namespace conetomo
