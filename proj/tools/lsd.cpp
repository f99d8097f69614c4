// lsd: latent shape differences over a collection workspace.
//
// Exit codes: 0 success, 1 computation or integrity error, 2 usage error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "lsd/io/pipeline.hpp"

namespace
{

lsd::DifferenceKind parse_kind(const std::string& s)
{
    if (s == "area") {
        return lsd::DifferenceKind::Area;
    }
    if (s == "conformal") {
        return lsd::DifferenceKind::Conformal;
    }
    throw lsd::io::UsageError("--kind must be area or conformal");
}

template <typename T>
std::optional<T> opt_if(const CLI::Option* o, const T& v)
{
    return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace lsd::io;
    using lsd::Index;
    CLI::App app{"Latent shape differences: spectra, map networks, latent bases, variability and operator algebra"};
    app.require_subcommand(1);
    std::string root = ".";
    app.add_option("-w,--workspace", root, "Workspace directory holding lsd.json")->capture_default_str();
    app.set_version_flag("--version", std::string(kToolVersion));

    // spectra
    auto* spectra = app.add_subcommand("spectra", "Compute Laplace-Beltrami eigenbases for every mesh in a directory");
    std::string mesh_dir;
    Index k = 0;
    std::string format;
    std::string config_file;
    spectra->add_option("meshes", mesh_dir, "Directory of OFF/OBJ/PLY meshes")->required();
    auto* k_opt = spectra->add_option("--k", k, "Eigenpairs per shape");
    auto* fmt_opt = spectra->add_option("--format", format, "Only read this format (off, obj, ply)");
    auto* cfg_opt = spectra->add_option("--config", config_file, "JSON config merged into the workspace config");

    // fmn
    auto* fmn = app.add_subcommand("fmn", "Build the functional map network");
    std::string topology = "mst";
    std::string maps = "correspondence";
    std::string pairs;
    bool identity = false;
    fmn->add_option("--topology", topology, "mst, knn:K, clique or chain")->capture_default_str();
    fmn->add_option("--maps", maps, "correspondence or landmarks")->capture_default_str();
    auto* pairs_opt = fmn->add_option("--pairs", pairs, "Directory of <src>__<tgt>.txt vertex pair files");
    fmn->add_flag("--identity", identity, "Shapes share connectivity; missing pairs use the identity");

    // latent
    auto* latent = app.add_subcommand("latent", "Consistent latent basis and latent shape differences");
    Index m = 0;
    std::string latent_kind = "both";
    bool normalized = false;
    auto* m_opt = latent->add_option("--m", m, "Latent dimension");
    latent->add_option("--kind", latent_kind, "area, conformal or both")->capture_default_str();
    latent->add_flag("--normalized", normalized, "Divide differences by the collection size");

    // variability
    auto* var = app.add_subcommand("variability", "Most distinctive latent functions");
    std::string mode = "global";
    std::string partition;
    int count = 3;
    bool emit_fields = false;
    std::string var_kind = "area";
    var->add_option("--mode", mode, "global or cross")->capture_default_str();
    auto* part_opt = var->add_option("--partition", partition, "JSON with cluster_a and cluster_b id lists");
    var->add_option("--count", count, "Number of functions")->capture_default_str();
    var->add_flag("--emit-fields", emit_fields, "Write per-vertex fields of the top function");
    var->add_option("--kind", var_kind, "area or conformal")->capture_default_str();

    // ops
    auto* ops = app.add_subcommand("ops", "Operator algebra on latent differences");
    ops->require_subcommand(1);
    std::string ops_kind = "area";
    std::string name;
    ops->add_option("--kind", ops_kind, "area or conformal")->capture_default_str();
    auto* name_opt = ops->add_option("--name", name, "Artifact name under ops/");
    std::string a, b, c;
    auto* analogy_cmd = ops->add_subcommand("analogy", "D_B D_A^-1 D_C");
    analogy_cmd->add_option("A", a)->required();
    analogy_cmd->add_option("B", b)->required();
    analogy_cmd->add_option("C", c)->required();
    auto* interp_cmd = ops->add_subcommand("interp", "(1-t) D_A + t D_B");
    double t = 0.5;
    interp_cmd->add_option("A", a)->required();
    interp_cmd->add_option("B", b)->required();
    interp_cmd->add_option("--t", t)->capture_default_str();
    auto* mix_cmd = ops->add_subcommand("mix", "Replace the region block of D_A with that of D_B");
    std::string region;
    Index p = -1;
    mix_cmd->add_option("A", a)->required();
    mix_cmd->add_option("B", b)->required();
    mix_cmd->add_option("--region", region, "JSON {shape, vertices}")->required();
    mix_cmd->add_option("--p", p, "Localized basis size (default min(10, m))");
    auto* desc_cmd = ops->add_subcommand("descriptors", "Latent difference spectra per shape");
    auto* align_cmd = ops->add_subcommand("align", "Pair shapes across two clusters without cross maps");
    std::string truth;
    Index align_m = 0;
    align_cmd->add_option("--partition", partition, "JSON with cluster_a and cluster_b")->required();
    auto* truth_opt = align_cmd->add_option("--truth", truth, "JSON with a \"pairing\" list of [a, b] ids");
    auto* align_m_opt = align_cmd->add_option("--m", align_m, "Latent dimension per cluster");

    // extend
    auto* extend = app.add_subcommand("extend", "Place a new shape into the latent basis");
    std::string new_mesh, corr, neighbor = "auto", new_id;
    extend->add_option("--mesh", new_mesh, "Mesh of the new shape")->required();
    extend->add_option("--correspondence", corr, "Pair file neighbor -> new shape, or directory of them")->required();
    extend->add_option("--neighbor", neighbor, "auto or a member id")->capture_default_str();
    auto* id_opt = extend->add_option("--id", new_id, "Id for the new shape (default: mesh stem)");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic family with ground truth");
    GenerateArgs gargs;
    int seed = 0;
    int subdiv = 0;
    bool open_chain = false;
    gen->add_option("family", gargs.family, "sphere-bump, chain, two-cluster or perturbation")->required();
    gen->add_option("out", gargs.out_dir, "Output directory")->required();
    gen->add_option("--count", gargs.count, "Family size parameter");
    auto* seed_opt = gen->add_option("--seed", seed);
    auto* sub_opt = gen->add_option("--subdivisions", subdiv);
    gen->add_flag("--open", open_chain, "Chain family ramps instead of cycling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            gargs.cycle = !open_chain;
            if (seed_opt->count()) {
                gargs.seed = static_cast<std::uint64_t>(seed);
            }
            gargs.subdivisions = opt_if(sub_opt, subdiv);
            return run_generate(gargs, std::cout);
        }
        Workspace ws(root);
        if (spectra->parsed()) {
            SpectraArgs s;
            s.mesh_dir = mesh_dir;
            s.k = opt_if(k_opt, k);
            if (fmt_opt->count()) {
                try {
                    s.format = lsd::parse_format(format);
                } catch (const lsd::Error& e) {
                    throw UsageError(e.what());
                }
            }
            if (cfg_opt->count()) {
                s.config = config_file;
            }
            return run_spectra(ws, s, std::cout, std::cerr);
        }
        if (fmn->parsed()) {
            FmnArgs f;
            f.topology = topology;
            if (maps == "correspondence") {
                f.maps = MapSource::Correspondence;
            } else if (maps == "landmarks") {
                f.maps = MapSource::Landmarks;
            } else {
                throw UsageError("--maps must be correspondence or landmarks");
            }
            if (pairs_opt->count()) {
                f.pairs_dir = pairs;
            }
            f.identity = identity;
            return run_fmn(ws, f, std::cout, std::cerr);
        }
        if (latent->parsed()) {
            LatentArgs l;
            l.m = opt_if(m_opt, m);
            l.normalized = normalized;
            if (latent_kind == "area") {
                l.kind = KindSelection::Area;
            } else if (latent_kind == "conformal") {
                l.kind = KindSelection::Conformal;
            } else if (latent_kind == "both") {
                l.kind = KindSelection::Both;
            } else {
                throw UsageError("--kind must be area, conformal or both");
            }
            return run_latent(ws, l, std::cout, std::cerr);
        }
        if (var->parsed()) {
            VariabilityArgs v;
            if (mode == "global") {
                v.mode = lsd::VariabilityMode::Global;
            } else if (mode == "cross") {
                v.mode = lsd::VariabilityMode::CrossCollection;
            } else {
                throw UsageError("--mode must be global or cross");
            }
            if (part_opt->count()) {
                v.partition = partition;
            }
            v.count = count;
            v.emit_fields = emit_fields;
            v.kind = parse_kind(var_kind);
            return run_variability(ws, v, std::cout, std::cerr);
        }
        if (ops->parsed()) {
            const auto kind = parse_kind(ops_kind);
            const auto nm = opt_if(name_opt, name);
            if (analogy_cmd->parsed()) {
                return run_analogy(ws, {a, b, c, kind, nm}, std::cout);
            }
            if (interp_cmd->parsed()) {
                return run_interp(ws, {a, b, t, kind, nm}, std::cout);
            }
            if (mix_cmd->parsed()) {
                return run_mix(ws, {a, b, region, p, kind, nm}, std::cout);
            }
            if (desc_cmd->parsed()) {
                return run_descriptors(ws, kind, std::cout);
            }
            if (align_cmd->parsed()) {
                AlignArgs al;
                al.partition = partition;
                if (truth_opt->count()) {
                    al.truth = truth;
                }
                al.m = opt_if(align_m_opt, align_m);
                return run_align(ws, al, std::cout);
            }
        }
        if (extend->parsed()) {
            ExtendArgs e;
            e.mesh = new_mesh;
            e.correspondence = corr;
            e.neighbor = neighbor;
            e.id = opt_if(id_opt, new_id);
            return run_extend(ws, e, std::cout, std::cerr);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const lsd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
