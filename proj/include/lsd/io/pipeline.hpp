#pragma once

// Workspace-level pipeline stages behind the command-line tool. Each stage
// reads its inputs through the manifest (hash-checked), writes artifacts
// atomically and records them back into the manifest.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsd/fmaps.hpp"
#include "lsd/io/container.hpp"
#include "lsd/io/hash.hpp"
#include "lsd/io/workspace.hpp"
#include "lsd/latent.hpp"
#include "lsd/mesh.hpp"
#include "lsd/network.hpp"
#include "lsd/operator_algebra.hpp"
#include "lsd/spectral.hpp"
#include "lsd/synthetic.hpp"
#include "lsd/variability.hpp"

namespace lsd::io
{

/// Invalid command-line usage (exit code 2), as opposed to computation errors.
class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

namespace detail
{

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string head_of(const Vec& v, Index count)
{
    std::string s;
    for (Index i = 0; i < std::min(count, v.size()); ++i) {
        s += (i ? " " : "") + format_double(v(i));
    }
    return s;
}

inline json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec json_to_vec(const json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(values.data(), static_cast<Index>(values.size()));
}

inline std::string edge_file(const std::string& a, const std::string& b) { return a + "__" + b; }

inline std::optional<std::filesystem::path> find_pair_file(const std::filesystem::path& dir, const std::string& a,
                                                           const std::string& b)
{
    for (const char* ext : {".txt", ".corr", ""}) {
        const auto p = dir / (edge_file(a, b) + ext);
        if (std::filesystem::is_regular_file(p)) {
            return p;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Shape entries in manifest order.
inline std::vector<std::string> shape_ids(const Workspace& ws)
{
    std::vector<std::string> ids;
    if (ws.manifest().contains("shapes")) {
        for (const auto& s : ws.manifest().at("shapes")) {
            ids.push_back(s.at("id").get<std::string>());
        }
    }
    return ids;
}

inline const json& shape_entry(const Workspace& ws, const std::string& id)
{
    if (ws.manifest().contains("shapes")) {
        for (const auto& s : ws.manifest().at("shapes")) {
            if (s.at("id") == id) {
                return s;
            }
        }
    }
    fail(ErrorCode::UnknownShape, "workspace has no shape '" + id + "'");
}

inline ShapeSpectra load_shape_spectra(const Workspace& ws, const json& entry)
{
    ShapeSpectra s;
    s.shape_id = entry.at("id").get<std::string>();
    s.mm.stiffness = table_to_sparse(ws.get_matrix(entry.at("stiffness")));
    s.mm.mass = ws.get_vector(entry.at("mass"));
    s.basis.eigenvalues = ws.get_vector(entry.at("eigenvalues"));
    s.basis.eigenvectors = ws.get_matrix(entry.at("eigenvectors"));
    for (const auto& c : entry.value("clusters", json::array())) {
        s.basis.clusters.push_back({c.at(0).get<Index>(), c.at(1).get<Index>()});
    }
    s.extent = entry.at("extent").get<double>();
    return s;
}

inline std::vector<Vec> shape_dnas(const Workspace& ws)
{
    std::vector<Vec> out;
    for (const auto& s : ws.manifest().at("shapes")) {
        out.push_back(detail::json_to_vec(s.at("dna")));
    }
    return out;
}

inline std::vector<Vec> shape_eigenvalues(const Workspace& ws)
{
    std::vector<Vec> out;
    for (const auto& s : ws.manifest().at("shapes")) {
        out.push_back(ws.get_vector(s.at("eigenvalues")));
    }
    return out;
}

inline EigenbasisOptions eigenbasis_options(const Config& c)
{
    EigenbasisOptions o;
    o.dense_limit = c.dense_limit;
    o.cluster_gap = c.cluster_gap;
    return o;
}

inline LatentOptions latent_options(const Config& c) { return {c.gap_warning, c.cluster_gap}; }

/// Merges a config file and explicit overrides into the manifest's echoed config.
inline Config update_config(Workspace& ws, const std::optional<std::filesystem::path>& config_file)
{
    Config c = ws.config();
    if (config_file) {
        json merged = c.to_json();
        merged.update(read_json(*config_file));
        c = Config::from_json(merged);
    }
    ws.manifest()["config"] = c.to_json();
    return c;
}

// ---------------------------------------------------------------- spectra

struct SpectraArgs {
    std::filesystem::path mesh_dir;
    std::optional<Index> k;
    std::optional<MeshFormat> format;
    std::optional<std::filesystem::path> config;
};

inline std::vector<std::filesystem::path> list_meshes(const std::filesystem::path& dir,
                                                      const std::optional<MeshFormat>& format)
{
    if (!std::filesystem::is_directory(dir)) {
        fail(ErrorCode::IoError, "mesh directory " + dir.string() + " does not exist");
    }
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) {
            continue;
        }
        MeshFormat f{};
        try {
            f = format_from_extension(e.path());
        } catch (const Error&) {
            continue;
        }
        if (!format || *format == f) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Returns 0 when every shape is computed or up to date, 1 if any failed.
inline int run_spectra(Workspace& ws, const SpectraArgs& args, std::ostream& out, std::ostream& err)
{
    Config cfg = update_config(ws, args.config);
    if (args.k) {
        if (*args.k < 1) {
            throw UsageError("--k must be positive");
        }
        cfg.k = *args.k;
        ws.manifest()["config"] = cfg.to_json();
    }
    const auto files = list_meshes(args.mesh_dir, args.format);
    if (files.empty()) {
        fail(ErrorCode::IoError, "no mesh files found in " + args.mesh_dir.string());
    }
    const std::string settings = sha256_hex(cfg.to_json().dump());
    std::map<std::string, json> previous;
    if (ws.manifest().contains("shapes")) {
        for (const auto& s : ws.manifest().at("shapes")) {
            previous[s.at("id").get<std::string>()] = s;
        }
    }
    json shapes = json::array();
    int failures = 0;
    int computed = 0;
    for (const auto& file : files) {
        const std::string id = file.stem().string();
        try {
            const std::string abs = std::filesystem::absolute(file).lexically_normal().string();
            const std::string mesh_hash = sha256_file(file);
            auto it = previous.find(id);
            if (it != previous.end() && it->second.at("mesh").at("sha256") == mesh_hash &&
                it->second.value("settings", "") == settings) {
                bool intact = true;
                for (const char* key : {"eigenvalues", "eigenvectors", "mass", "stiffness"}) {
                    try {
                        ws.check_entry(it->second.at(key));
                    } catch (const Error&) {
                        intact = false;
                    }
                }
                if (intact) {
                    json entry = it->second;
                    entry["mesh"]["path"] = abs;
                    shapes.push_back(entry);
                    continue;
                }
            }
            std::vector<std::string> warnings;
            const Mesh mesh = load_mesh(file, &warnings);
            for (const auto& w : warnings) {
                err << file.string() << ": warning: " << w << "\n";
            }
            if (cfg.k > mesh.num_vertices()) {
                fail(ErrorCode::PreconditionViolation, "k=" + std::to_string(cfg.k) + " exceeds " +
                                                           std::to_string(mesh.num_vertices()) + " vertices");
            }
            ShapeSpectra sp = compute_spectra(mesh, cfg.k, eigenbasis_options(cfg));
            sp.shape_id = id;
            const std::string base = "spectra/" + id;
            json entry = {{"id", id},
                          {"mesh", {{"path", abs}, {"sha256", mesh_hash}}},
                          {"settings", settings},
                          {"k", cfg.k},
                          {"num_vertices", mesh.num_vertices()},
                          {"extent", sp.extent},
                          {"dna", detail::vec_to_json(shape_dna(sp.basis).spectrum_prefix)}};
            entry["eigenvalues"] = ws.put_matrix(base + ".eigenvalues.lsk", sp.basis.eigenvalues);
            entry["eigenvectors"] = ws.put_matrix(base + ".eigenvectors.lsk", sp.basis.eigenvectors);
            entry["mass"] = ws.put_matrix(base + ".mass.lsk", sp.mm.mass);
            entry["stiffness"] = ws.put_matrix(base + ".stiffness.lsk", sparse_to_table(sp.mm.stiffness));
            json clusters = json::array();
            for (const auto& c : sp.basis.clusters) {
                clusters.push_back({c.begin, c.end});
            }
            entry["clusters"] = clusters;
            if (!sp.basis.clusters.empty()) {
                err << id << ": note: " << sp.basis.clusters.size()
                    << " eigenvalue cluster(s); eigenvector order inside clusters is solver order\n";
            }
            shapes.push_back(entry);
            ++computed;
            out << "computed " << id << " (" << mesh.num_vertices() << " vertices, k=" << cfg.k << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            err << "error: " << file.string() << ": " << e.what() << "\n";
        }
    }
    std::vector<std::string> before;
    for (const auto& [id, _] : previous) {
        before.push_back(id);
    }
    std::vector<std::string> after;
    for (const auto& s : shapes) {
        after.push_back(s.at("id").get<std::string>());
    }
    std::sort(after.begin(), after.end());
    const bool changed = computed > 0 || before != after;
    ws.manifest()["shapes"] = shapes;
    if (changed) {
        ws.manifest().erase("fmn");
        ws.manifest().erase("latent");
        ws.manifest().erase("variability");
        ws.manifest().erase("extended");
    }
    ws.save();
    if (!changed && failures == 0) {
        out << "up to date (" << shapes.size() << " shapes)\n";
    }
    return failures == 0 ? 0 : 1;
}

// -------------------------------------------------------------------- fmn

enum class MapSource { Correspondence, Landmarks };

struct FmnArgs {
    std::string topology{"mst"};
    MapSource maps{MapSource::Correspondence};
    /// Directory of `<src>__<tgt>.txt` files (correspondences or landmarks).
    std::optional<std::filesystem::path> pairs_dir;
    /// Shared connectivity: identity correspondence on every edge.
    bool identity{false};
};

inline TopologySpec parse_topology(const std::string& text)
{
    TopologySpec spec;
    if (text == "mst") {
        spec.kind = TopologyKind::Mst;
    } else if (text == "clique") {
        spec.kind = TopologyKind::Clique;
    } else if (text == "chain") {
        spec.kind = TopologyKind::Chain;
    } else if (text.rfind("knn:", 0) == 0) {
        spec.kind = TopologyKind::Knn;
        try {
            std::size_t used = 0;
            spec.k_nn = std::stoi(text.substr(4), &used);
            if (used != text.size() - 4 || spec.k_nn < 1) {
                throw std::invalid_argument(text);
            }
        } catch (const std::exception&) {
            throw UsageError("--topology knn:K needs a positive integer K");
        }
    } else {
        throw UsageError("unknown topology '" + text + "' (expected mst, knn:K, clique or chain)");
    }
    return spec;
}

/// Builds the network described by the workspace's `fmn` section.
inline FMNetwork load_network(const Workspace& ws)
{
    if (!ws.manifest().contains("fmn")) {
        fail(ErrorCode::PreconditionViolation, "workspace has no functional map network; run `fmn` first");
    }
    const auto ids = shape_ids(ws);
    FMNetwork net;
    net.ids = ids;
    net.spectra = shape_eigenvalues(ws);
    const json& fmn = ws.manifest().at("fmn");
    const std::string kind = fmn.at("topology").get<std::string>();
    net.topology = kind == "clique" ? TopologyKind::Clique
                   : kind == "chain" ? TopologyKind::Chain
                   : kind == "mst"   ? TopologyKind::Mst
                   : kind == "knn"   ? TopologyKind::Knn
                                     : TopologyKind::Custom;
    for (const auto& e : fmn.at("edges")) {
        FunctionalMap fm;
        fm.source_id = e.at("source").get<std::string>();
        fm.target_id = e.at("target").get<std::string>();
        fm.matrix = ws.get_matrix(e.at("map"));
        net.maps.emplace(std::make_pair(net.index_of(fm.source_id), net.index_of(fm.target_id)), std::move(fm));
    }
    net.validate();
    return net;
}

inline int run_fmn(Workspace& ws, const FmnArgs& args, std::ostream& out, std::ostream& err)
{
    const TopologySpec spec = parse_topology(args.topology);
    if (args.maps == MapSource::Landmarks && !args.pairs_dir) {
        throw UsageError("--maps landmarks requires --pairs DIR");
    }
    if (args.maps == MapSource::Correspondence && !args.pairs_dir && !args.identity) {
        throw UsageError("--maps correspondence requires --pairs DIR or --identity");
    }
    ws.verify_all();
    const Config cfg = ws.config();
    const auto ids = shape_ids(ws);
    if (ids.size() < 2) {
        fail(ErrorCode::InsufficientShapes, "functional map network needs at least 2 shapes");
    }
    const Topology topo = build_topology(shape_dnas(ws), spec);
    for (const auto& note : topo.notes) {
        err << "note: " << note << "\n";
    }
    std::vector<ShapeSpectra> shapes;
    for (const auto& s : ws.manifest().at("shapes")) {
        shapes.push_back(load_shape_spectra(ws, s));
    }
    std::map<std::pair<int, int>, bool> under;
    const MapProvider provider = [&](int i, int j) {
        const auto& a = shapes[static_cast<std::size_t>(i)];
        const auto& b = shapes[static_cast<std::size_t>(j)];
        const auto kind = args.maps == MapSource::Correspondence ? Correspondence::Kind::FullBijection
                                                                 : Correspondence::Kind::SparseLandmarks;
        Correspondence corr;
        if (args.pairs_dir) {
            if (auto p = detail::find_pair_file(*args.pairs_dir, ids[i], ids[j])) {
                corr = read_correspondence(*p, kind);
            } else if (auto q = detail::find_pair_file(*args.pairs_dir, ids[j], ids[i])) {
                corr = reversed(read_correspondence(*q, kind));
            } else if (args.identity) {
                corr = identity_correspondence(a.basis.num_vertices());
            } else {
                fail(ErrorCode::IoError, "missing correspondence file " + detail::edge_file(ids[i], ids[j]) +
                                             ".txt in " + args.pairs_dir->string());
            }
        } else {
            corr = identity_correspondence(a.basis.num_vertices());
        }
        if (args.maps == MapSource::Correspondence) {
            return fmap_from_correspondence(a, b, corr);
        }
        LandmarkOptions lo;
        lo.radius_fraction = cfg.landmark_radius;
        lo.tikhonov = cfg.tikhonov;
        LandmarkFit fit = fmap_from_landmarks(a, b, corr, cfg.regularizer, lo);
        under[{i, j}] = fit.under_determined;
        if (fit.under_determined) {
            err << "warning: UnderDetermined landmark fit on " << ids[i] << "->" << ids[j] << "\n";
        }
        return fit.map;
    };
    const FMNetwork net = attach_maps(ids, shape_eigenvalues(ws), topo, provider);

    std::error_code ec;
    std::filesystem::remove_all(ws.resolve("fmn"), ec);
    json edges = json::array();
    for (const auto& [key, fm] : net.maps) {
        json e = {{"source", fm.source_id}, {"target", fm.target_id}};
        e["map"] = ws.put_matrix("fmn/" + detail::edge_file(fm.source_id, fm.target_id) + ".lsk", fm.matrix);
        if (under.count(key)) {
            e["under_determined"] = under[key];
        }
        edges.push_back(e);
    }
    const ConsistencyReport rep = consistency_report(net);
    json fmn = {{"topology", to_string(topo.kind)},
                {"maps", args.maps == MapSource::Correspondence ? "correspondence" : "landmarks"},
                {"notes", topo.notes},
                {"edges", edges},
                {"consistency", {{"cycles", rep.cycles.size()}, {"min", rep.min}, {"mean", rep.mean}, {"max", rep.max}}}};
    if (topo.kind == TopologyKind::Knn) {
        fmn["k_nn"] = spec.k_nn;
    }
    ws.manifest()["fmn"] = fmn;
    ws.manifest().erase("latent");
    ws.manifest().erase("variability");
    ws.manifest().erase("extended");
    ws.save();
    out << "topology " << to_string(topo.kind) << ": " << topo.edges.size() << " edges, " << net.maps.size()
        << " directed maps\n";
    out << "consistency: " << rep.cycles.size() << " cycles, residual min " << detail::format_double(rep.min)
        << " mean " << detail::format_double(rep.mean) << " max " << detail::format_double(rep.max) << "\n";
    return 0;
}

// ----------------------------------------------------------------- latent

enum class KindSelection { Area, Conformal, Both };

struct LatentArgs {
    std::optional<Index> m;
    KindSelection kind{KindSelection::Both};
    bool normalized{false};
};

inline int run_latent(Workspace& ws, const LatentArgs& args, std::ostream& out, std::ostream& err)
{
    ws.verify_all();
    Config cfg = ws.config();
    const FMNetwork net = load_network(ws);
    Index min_k = std::numeric_limits<Index>::max();
    for (int i = 0; i < net.size(); ++i) {
        min_k = std::min(min_k, net.basis_size(i));
    }
    const Index m = args.m.value_or(std::min(cfg.m, min_k));
    if (m < 1 || m > min_k) {
        throw UsageError("--m must be in [1, " + std::to_string(min_k) + "] (smallest basis size k)");
    }
    cfg.m = m;
    ws.manifest()["config"] = cfg.to_json();

    const LatentOptions lo = latent_options(cfg);
    const ConsistentLatentBasis raw = consistent_latent_basis(net, m, lo);
    const CanonicalResult canon = canonicalize(raw, net.spectra, lo);
    const auto& clb = canon.clb;
    const double gram_res = (clb.gram() - Mat::Identity(m, m)).cwiseAbs().maxCoeff();
    const Mat metric = clb.metric(net.spectra);
    const double diag_mass = metric.diagonal().squaredNorm();
    const double off_mass = metric.squaredNorm() - diag_mass;
    const double off_ratio = diag_mass > 0.0 ? std::sqrt(std::max(0.0, off_mass) / diag_mass) : 0.0;

    std::error_code ec;
    std::filesystem::remove_all(ws.resolve("latent"), ec);
    json latent = {{"m", m},
                   {"canonical", true},
                   {"normalized", args.normalized},
                   {"consistency_residual", clb.consistency_residual},
                   {"gram_residual", gram_res},
                   {"metric_offdiagonal_ratio", off_ratio},
                   {"warnings", clb.warnings}};
    std::string collection;
    for (const auto& s : ws.manifest().at("shapes")) {
        collection += s.at("eigenvectors").at("sha256").get<std::string>();
    }
    for (const auto& e : ws.manifest().at("fmn").at("edges")) {
        collection += e.at("map").at("sha256").get<std::string>();
    }
    latent["collection_hash"] = sha256_hex(collection);
    latent["spectrum"] = ws.put_matrix("latent/spectrum.lsk", canon.latent.spectrum);
    json clusters = json::array();
    for (const auto& c : canon.latent.clusters) {
        clusters.push_back({c.begin, c.end});
    }
    latent["clusters"] = clusters;
    std::vector<DifferenceKind> kinds;
    if (args.kind != KindSelection::Conformal) {
        kinds.push_back(DifferenceKind::Area);
    }
    if (args.kind != KindSelection::Area) {
        kinds.push_back(DifferenceKind::Conformal);
    }
    json shapes = json::object();
    for (int i = 0; i < clb.size(); ++i) {
        shapes[clb.ids[i]]["y"] = ws.put_matrix("latent/y/" + clb.ids[i] + ".lsk", clb.y[i]);
    }
    for (const auto kind : kinds) {
        const auto diffs = latent_differences(clb, net.spectra, canon.latent, kind, args.normalized);
        for (const auto& d : diffs) {
            shapes[d.shape_id][to_string(kind)] =
                ws.put_matrix("latent/" + to_string(kind) + "/" + d.shape_id + ".lsk", d.matrix);
        }
    }
    latent["shapes"] = shapes;
    ws.manifest()["latent"] = latent;
    ws.manifest().erase("variability");
    ws.manifest().erase("extended");
    ws.save();
    for (const auto& w : clb.warnings) {
        err << "notice: " << w << "\n";
    }
    out << "latent basis: " << clb.size() << " shapes, m=" << m << "\n";
    out << "consistency residual " << detail::format_double(clb.consistency_residual) << "\n";
    out << "latent spectrum head: " << detail::head_of(canon.latent.spectrum, 8) << "\n";
    out << "canonical residuals: gram " << detail::format_double(gram_res) << ", metric off-diagonal "
        << detail::format_double(off_ratio) << "\n";
    return 0;
}

inline void require_latent(const Workspace& ws)
{
    if (!ws.manifest().contains("latent")) {
        fail(ErrorCode::PreconditionViolation, "workspace has no latent artifacts; run `latent` first");
    }
}

/// Latent differences of one kind, in shape order.
inline std::vector<Mat> load_differences(const Workspace& ws, DifferenceKind kind)
{
    require_latent(ws);
    const json& shapes = ws.manifest().at("latent").at("shapes");
    std::vector<Mat> out;
    for (const auto& id : shape_ids(ws)) {
        const json& s = shapes.at(id);
        if (!s.contains(to_string(kind))) {
            fail(ErrorCode::PreconditionViolation, "no " + to_string(kind) + " differences; rerun `latent --kind " +
                                                       to_string(kind) + "` or `--kind both`");
        }
        out.push_back(ws.get_matrix(s.at(to_string(kind))));
    }
    return out;
}

inline Mat load_difference(const Workspace& ws, const std::string& id, DifferenceKind kind)
{
    require_latent(ws);
    const json& shapes = ws.manifest().at("latent").at("shapes");
    if (shapes.contains(id) && shapes.at(id).contains(to_string(kind))) {
        return ws.get_matrix(shapes.at(id).at(to_string(kind)));
    }
    for (const auto& e : ws.manifest().value("extended", json::array())) {
        if (e.at("id") == id && e.contains(to_string(kind))) {
            return ws.get_matrix(e.at(to_string(kind)));
        }
    }
    fail(ErrorCode::UnknownShape, "no " + to_string(kind) + " latent difference for shape '" + id + "'");
}

inline Partition read_partition(const std::filesystem::path& path)
{
    const json j = read_json(path);
    Partition p;
    try {
        p.cluster_a = j.at("cluster_a").get<std::vector<std::string>>();
        p.cluster_b = j.at("cluster_b").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": partition needs cluster_a and cluster_b lists");
    }
    return p;
}

// ------------------------------------------------------------ variability

struct VariabilityArgs {
    VariabilityMode mode{VariabilityMode::Global};
    std::optional<std::filesystem::path> partition;
    int count{3};
    bool emit_fields{false};
    DifferenceKind kind{DifferenceKind::Area};
};

inline int run_variability(Workspace& ws, const VariabilityArgs& args, std::ostream& out, std::ostream& /*err*/)
{
    if (args.mode == VariabilityMode::CrossCollection && !args.partition) {
        throw UsageError("--mode cross requires --partition FILE");
    }
    ws.verify_all();
    const Config cfg = ws.config();
    const auto ids = shape_ids(ws);
    const auto diffs = load_differences(ws, args.kind);
    const Index m = diffs.front().rows();
    if (args.count < 1 || args.count > m) {
        throw UsageError("--count must be in [1, " + std::to_string(m) + "]");
    }
    VariabilityResult res;
    if (args.mode == VariabilityMode::Global) {
        res = global_variability(diffs, args.count);
    } else {
        res = cross_collection_variability(diffs, ids, read_partition(*args.partition), args.count, cfg.within_weight);
    }
    std::error_code ec;
    std::filesystem::remove_all(ws.resolve("variability"), ec);
    json funcs = json::array();
    for (const auto& f : res.functions) {
        funcs.push_back({{"eigenvalue", f.eigenvalue}, {"alpha", detail::vec_to_json(f.alpha)}});
    }
    const std::string mode = args.mode == VariabilityMode::Global ? "global" : "cross";
    json doc = {{"mode", mode},
                {"kind", to_string(args.kind)},
                {"functions", funcs},
                {"degenerate", res.degenerate},
                {"warnings", res.warnings}};
    if (args.mode == VariabilityMode::CrossCollection) {
        doc["within_weight"] = cfg.within_weight;
    }
    json record = {{"mode", mode}, {"kind", to_string(args.kind)}};
    record["functions"] = ws.put_text("variability/functions.json", doc.dump(2) + "\n");

    const SeparationEmbedding emb = separation_embedding(diffs, res.functions.front().alpha);
    std::ostringstream csv;
    csv << "shape_id,pc1,pc2\n" << std::setprecision(17);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv << ids[i] << "," << emb.coords(static_cast<Index>(i), 0) << "," << emb.coords(static_cast<Index>(i), 1)
            << "\n";
    }
    record["embedding"] = ws.put_text("variability/embedding.csv", csv.str());

    if (args.emit_fields) {
        const json& latent_shapes = ws.manifest().at("latent").at("shapes");
        json fields = json::object();
        json bundle = json::array();
        for (const auto& id : ids) {
            const ShapeSpectra sp = load_shape_spectra(ws, shape_entry(ws, id));
            const Mat y = ws.get_matrix(latent_shapes.at(id).at("y"));
            const ShapeField f = transfer_to_shape(res.functions.front().alpha, sp.basis.eigenvectors, y);
            std::ostringstream txt;
            txt << std::setprecision(17);
            for (Index v = 0; v < f.raw.size(); ++v) {
                txt << v << " " << f.raw(v) << "\n";
            }
            fields[id] = ws.put_text("variability/fields/" + id + ".txt", txt.str());
            bundle.push_back({{"shape_id", id},
                              {"function", 0},
                              {"max_abs", f.max_abs},
                              {"normalization", "abs(value) / max_abs"},
                              {"raw", detail::vec_to_json(f.raw)},
                              {"normalized", detail::vec_to_json(f.normalized)}});
        }
        record["fields"] = fields;
        record["fields_bundle"] = ws.put_text("variability/fields.json", bundle.dump() + "\n");
    }
    ws.manifest()["variability"] = record;
    ws.save();
    for (const auto& w : res.warnings) {
        out << "warning: " << w << "\n";
    }
    out << mode << " variability (" << to_string(args.kind) << "): ";
    for (std::size_t c = 0; c < res.functions.size(); ++c) {
        out << (c ? " " : "") << detail::format_double(res.functions[c].eigenvalue);
    }
    out << "\n";
    return 0;
}

// -------------------------------------------------------------------- ops

inline json write_expression(Workspace& ws, const std::string& name, const OperatorExpression& expr,
                             DifferenceKind kind, const std::vector<std::string>& input_hashes)
{
    json entry = {{"name", name}};
    entry["result"] = ws.put_matrix("ops/" + name + ".lsk", expr.result);
    json recipe = {{"formula", expr.recipe.formula},
                   {"inputs", expr.recipe.inputs},
                   {"input_sha256", input_hashes},
                   {"kind", to_string(kind)},
                   {"params", expr.recipe.params},
                   {"result_sha256", entry["result"]["sha256"]}};
    entry["recipe"] = ws.put_text("ops/" + name + ".json", recipe.dump(2) + "\n");
    ws.manifest()["ops"][name] = entry;
    ws.save();
    return entry;
}

inline std::string difference_hash(const Workspace& ws, const std::string& id, DifferenceKind kind)
{
    const json& shapes = ws.manifest().at("latent").at("shapes");
    if (shapes.contains(id)) {
        return shapes.at(id).at(to_string(kind)).at("sha256").get<std::string>();
    }
    for (const auto& e : ws.manifest().value("extended", json::array())) {
        if (e.at("id") == id) {
            return e.at(to_string(kind)).at("sha256").get<std::string>();
        }
    }
    return "";
}

struct AnalogyArgs {
    std::string a, b, c;
    DifferenceKind kind{DifferenceKind::Area};
    std::optional<std::string> name;
};

inline int run_analogy(Workspace& ws, const AnalogyArgs& args, std::ostream& out)
{
    ws.verify_all();
    const Config cfg = ws.config();
    const Mat da = load_difference(ws, args.a, args.kind);
    const Mat db = load_difference(ws, args.b, args.kind);
    const Mat dc = load_difference(ws, args.c, args.kind);
    const OperatorExpression expr = analogy(da, db, dc, {cfg.max_condition}, {args.a, args.b, args.c});
    const std::string name = args.name.value_or("analogy_" + args.a + "_" + args.b + "_" + args.c);
    write_expression(ws, name, expr, args.kind,
                     {difference_hash(ws, args.a, args.kind), difference_hash(ws, args.b, args.kind),
                      difference_hash(ws, args.c, args.kind)});
    out << "wrote ops/" << name << ".lsk (condition of D_A " << detail::format_double(expr.recipe.params.at("condition"))
        << ")\n";
    return 0;
}

struct InterpArgs {
    std::string a, b;
    double t{0.5};
    DifferenceKind kind{DifferenceKind::Area};
    std::optional<std::string> name;
};

inline int run_interp(Workspace& ws, const InterpArgs& args, std::ostream& out)
{
    if (!(args.t >= 0.0 && args.t <= 1.0)) {
        throw UsageError("--t must lie in [0, 1]");
    }
    ws.verify_all();
    const Mat da = load_difference(ws, args.a, args.kind);
    const Mat db = load_difference(ws, args.b, args.kind);
    const OperatorExpression expr = interpolate(da, db, args.t, {args.a, args.b});
    const std::string name = args.name.value_or("interp_" + args.a + "_" + args.b + "_" + detail::format_double(args.t));
    write_expression(ws, name, expr, args.kind,
                     {difference_hash(ws, args.a, args.kind), difference_hash(ws, args.b, args.kind)});
    out << "wrote ops/" << name << ".lsk\n";
    return 0;
}

struct MixArgs {
    std::string a, b;
    std::filesystem::path region;
    Index p{-1};
    DifferenceKind kind{DifferenceKind::Area};
    std::optional<std::string> name;
};

/// Region file: {"shape": id, "vertices": [...]}.
inline std::pair<std::string, std::vector<int>> read_region(const std::filesystem::path& path)
{
    const json j = read_json(path);
    try {
        return {j.at("shape").get<std::string>(), j.at("vertices").get<std::vector<int>>()};
    } catch (const json::exception&) {
        fail(ErrorCode::ParseError, path.string() + ": region needs \"shape\" and \"vertices\"");
    }
}

inline int run_mix(Workspace& ws, const MixArgs& args, std::ostream& out)
{
    ws.verify_all();
    require_latent(ws);
    const Mat da = load_difference(ws, args.a, args.kind);
    const Mat db = load_difference(ws, args.b, args.kind);
    const auto [shape, vertices] = read_region(args.region);
    const ShapeSpectra sp = load_shape_spectra(ws, shape_entry(ws, shape));
    ConsistentLatentBasis clb;
    clb.ids = shape_ids(ws);
    clb.m = da.rows();
    clb.canonical = true;
    for (const auto& id : clb.ids) {
        clb.y.push_back(ws.get_matrix(ws.manifest().at("latent").at("shapes").at(id).at("y")));
    }
    const ProjectionBasis f = localized_basis(clb, shape, sp.basis.eigenvectors, sp.mm.mass, vertices, args.p);
    OperatorExpression expr = partial_mix(da, db, f, {args.a, args.b});
    expr.recipe.inputs.push_back(args.region.string());
    const std::string name = args.name.value_or("mix_" + args.a + "_" + args.b);
    write_expression(ws, name, expr, args.kind,
                     {difference_hash(ws, args.a, args.kind), difference_hash(ws, args.b, args.kind),
                      sha256_file(args.region)});
    out << "wrote ops/" << name << ".lsk (p=" << f.f.cols() << ", " << f.description << ")\n";
    return 0;
}

inline int run_descriptors(Workspace& ws, DifferenceKind kind, std::ostream& out)
{
    ws.verify_all();
    const auto ids = shape_ids(ws);
    const auto diffs = load_differences(ws, kind);
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const SpectrumDescriptor d = lssd_spectrum_descriptor(diffs[i], kind);
        csv << ids[i];
        for (Index c = 0; c < d.values.size(); ++c) {
            csv << "," << d.values(c);
        }
        csv << "\n";
        out << ids[i] << ": " << detail::head_of(d.values, 6) << (d.values.size() > 6 ? " ..." : "") << "\n";
    }
    ws.manifest()["ops"]["descriptors_" + to_string(kind)] =
        ws.put_text("ops/descriptors_" + to_string(kind) + ".csv", csv.str());
    ws.save();
    return 0;
}

struct AlignArgs {
    std::filesystem::path partition;
    std::optional<std::filesystem::path> truth;
    std::optional<Index> m;
};

struct AlignResult {
    std::vector<std::string> from;
    std::vector<std::string> to;
    std::optional<double> accuracy;
};

/// Network restricted to a subset of shapes (maps inside the subset only).
inline FMNetwork induced_subnetwork(const FMNetwork& net, const std::vector<std::string>& members)
{
    FMNetwork sub;
    std::map<int, int> remap;
    for (const auto& id : members) {
        const int i = net.index_of(id);
        remap[i] = sub.size();
        sub.ids.push_back(id);
        sub.spectra.push_back(net.spectra[static_cast<std::size_t>(i)]);
    }
    sub.topology = TopologyKind::Custom;
    for (const auto& [key, fm] : net.maps) {
        if (remap.count(key.first) && remap.count(key.second)) {
            sub.maps.emplace(std::make_pair(remap[key.first], remap[key.second]), fm);
        }
    }
    sub.validate();
    return sub;
}

/**
 * @brief Per-cluster latent bases (no cross-cluster maps), area descriptors
 * and nearest-neighbor pairing from cluster A to cluster B.
 */
inline AlignResult align_clusters(const FMNetwork& net, const Partition& part, Index m, const LatentOptions& lo)
{
    part.validate();
    std::vector<std::vector<Vec>> desc(2);
    for (int c = 0; c < 2; ++c) {
        const auto& members = c == 0 ? part.cluster_a : part.cluster_b;
        const FMNetwork sub = induced_subnetwork(net, members);
        const LatentPipeline p = run_latent_pipeline(sub, m, false, lo);
        for (const auto& d : p.area) {
            desc[c].push_back(lssd_spectrum_descriptor(d.matrix).values);
        }
    }
    AlignResult r;
    const auto pairing = nearest_neighbor_pairing(desc[0], desc[1]);
    for (std::size_t i = 0; i < pairing.size(); ++i) {
        r.from.push_back(part.cluster_a[i]);
        r.to.push_back(part.cluster_b[static_cast<std::size_t>(pairing[i])]);
    }
    return r;
}

inline int run_align(Workspace& ws, const AlignArgs& args, std::ostream& out)
{
    ws.verify_all();
    const Config cfg = ws.config();
    const FMNetwork net = load_network(ws);
    const Partition part = read_partition(args.partition);
    partition_labels(part, net.ids);
    Index min_k = std::numeric_limits<Index>::max();
    for (int i = 0; i < net.size(); ++i) {
        min_k = std::min(min_k, net.basis_size(i));
    }
    const Index m = args.m.value_or(std::min(cfg.m, min_k));
    if (m < 1 || m > min_k) {
        throw UsageError("--m must be in [1, " + std::to_string(min_k) + "]");
    }
    AlignResult r = align_clusters(net, part, m, latent_options(cfg));
    for (std::size_t i = 0; i < r.from.size(); ++i) {
        out << r.from[i] << " -> " << r.to[i] << "\n";
    }
    if (args.truth) {
        const json truth = read_json(*args.truth);
        std::map<std::string, std::string> expected;
        for (const auto& pr : truth.at("pairing")) {
            expected[pr.at(0).get<std::string>()] = pr.at(1).get<std::string>();
        }
        int correct = 0;
        for (std::size_t i = 0; i < r.from.size(); ++i) {
            correct += expected.count(r.from[i]) && expected[r.from[i]] == r.to[i] ? 1 : 0;
        }
        r.accuracy = 100.0 * correct / static_cast<double>(r.from.size());
        out << "pairing accuracy: " << detail::format_double(*r.accuracy) << "% (" << correct << "/" << r.from.size()
            << ")\n";
    }
    return 0;
}

// ----------------------------------------------------------------- extend

struct ExtendArgs {
    std::filesystem::path mesh;
    std::filesystem::path correspondence;
    std::string neighbor{"auto"};
    std::optional<std::string> id;
};

inline int run_extend(Workspace& ws, const ExtendArgs& args, std::ostream& out, std::ostream& err)
{
    ws.verify_all();
    require_latent(ws);
    const Config cfg = ws.config();
    const auto ids = shape_ids(ws);
    const json& latent = ws.manifest().at("latent");
    const std::string new_id = args.id.value_or(args.mesh.stem().string());
    if (std::find(ids.begin(), ids.end(), new_id) != ids.end()) {
        throw UsageError("shape id '" + new_id + "' already belongs to the collection; pass --id");
    }
    std::optional<int> neighbor;
    if (args.neighbor != "auto") {
        auto it = std::find(ids.begin(), ids.end(), args.neighbor);
        if (it == ids.end()) {
            fail(ErrorCode::UnknownShape, "unknown --neighbor '" + args.neighbor + "'");
        }
        neighbor = static_cast<int>(it - ids.begin());
    }
    if (!std::filesystem::exists(args.correspondence)) {
        fail(ErrorCode::IoError, "missing correspondence " + args.correspondence.string());
    }
    std::vector<std::string> warnings;
    Mesh mesh = load_mesh(args.mesh, &warnings);
    mesh.shape_id = new_id;
    for (const auto& w : warnings) {
        err << args.mesh.string() << ": warning: " << w << "\n";
    }
    const Index k = shape_entry(ws, ids.front()).at("k").get<Index>();
    ShapeSpectra sp = compute_spectra(mesh, std::min<Index>(k, mesh.num_vertices()), eigenbasis_options(cfg));
    const Vec dna = shape_dna(sp.basis).spectrum_prefix;

    LatentShape ls;
    ls.spectrum = ws.get_vector(latent.at("spectrum"));
    ls.collection_size = static_cast<int>(ids.size());
    ConsistentLatentBasis clb;
    clb.ids = ids;
    clb.m = latent.at("m").get<Index>();
    clb.canonical = true;
    for (const auto& id : ids) {
        clb.y.push_back(ws.get_matrix(latent.at("shapes").at(id).at("y")));
    }
    const auto provider = [&](int i) {
        const ShapeSpectra member = load_shape_spectra(ws, shape_entry(ws, ids[static_cast<std::size_t>(i)]));
        std::filesystem::path file = args.correspondence;
        if (std::filesystem::is_directory(file)) {
            auto p = detail::find_pair_file(file, ids[static_cast<std::size_t>(i)], new_id);
            if (!p) {
                fail(ErrorCode::IoError, "missing correspondence " +
                                             detail::edge_file(ids[static_cast<std::size_t>(i)], new_id) + ".txt");
            }
            file = *p;
        }
        return fmap_from_correspondence(member, sp, read_correspondence(file));
    };
    const bool normalized = latent.value("normalized", false);
    const ExtendResult r = extend_to_shape(clb, ls, shape_dnas(ws), dna, sp.basis.eigenvalues, provider, neighbor,
                                           normalized);
    const std::string& nb = ids[static_cast<std::size_t>(r.neighbor)];
    out << "neighbor: " << nb << (neighbor ? " (given)" : " (auto, by Shape-DNA)") << "\n";

    json entry = {{"id", new_id},
                  {"extended", true},
                  {"neighbor", nb},
                  {"neighbor_choice", neighbor ? "given" : "auto"},
                  {"mesh", {{"path", std::filesystem::absolute(args.mesh).lexically_normal().string()},
                            {"sha256", sha256_file(args.mesh)}}},
                  {"dna", detail::vec_to_json(dna)}};
    const std::string base = "extended/" + new_id;
    entry["eigenvalues"] = ws.put_matrix(base + "/eigenvalues.lsk", sp.basis.eigenvalues);
    entry["y"] = ws.put_matrix(base + "/y.lsk", r.y);
    entry["area"] = ws.put_matrix(base + "/area.lsk", r.area.matrix);
    entry["conformal"] = ws.put_matrix(base + "/conformal.lsk", r.conformal.matrix);
    json& ext = ws.manifest()["extended"];
    if (!ext.is_array()) {
        ext = json::array();
    }
    for (auto it = ext.begin(); it != ext.end(); ++it) {
        if ((*it).at("id") == new_id) {
            ext.erase(it);
            break;
        }
    }
    ext.push_back(entry);
    ws.save();
    const Mat twin = load_difference(ws, nb, DifferenceKind::Area);
    out << "descriptor distance to " << nb << ": "
        << detail::format_double(
               (lssd_spectrum_descriptor(r.area.matrix).values - lssd_spectrum_descriptor(twin).values).norm())
        << "\n";
    return 0;
}

// --------------------------------------------------------------- generate

struct GenerateArgs {
    std::string family;
    std::filesystem::path out_dir;
    int count{0};
    bool cycle{true};
    std::optional<std::uint64_t> seed;
    std::optional<int> subdivisions;
};

inline int run_generate(const GenerateArgs& args, std::ostream& out)
{
    synthetic::Family fam;
    json params;
    if (args.family == "sphere-bump") {
        synthetic::SphereBumpOptions o;
        if (args.subdivisions) {
            o.subdivisions = *args.subdivisions;
        }
        if (args.seed) {
            o.seed = *args.seed;
        }
        if (args.count > 0) {
            o.per_cluster = args.count;
        }
        fam = synthetic::sphere_bump_family(o);
        params = {{"horizontal_height", o.horizontal_height}, {"vertical_heights", o.vertical_heights},
                  {"per_cluster", o.per_cluster},             {"subdivisions", o.subdivisions},
                  {"bump_radius", o.bump_radius},             {"seed", o.seed}};
    } else if (args.family == "chain") {
        synthetic::ChainOptions o;
        if (args.subdivisions) {
            o.subdivisions = *args.subdivisions;
        }
        const int count = args.count > 0 ? args.count : 23;
        fam = synthetic::chain_family(count, args.cycle, o);
        params = {{"count", count}, {"cycle", args.cycle}, {"subdivisions", o.subdivisions}};
    } else if (args.family == "two-cluster") {
        synthetic::TwoClusterOptions o;
        if (args.subdivisions) {
            o.subdivisions = *args.subdivisions;
        }
        if (args.seed) {
            o.seed = *args.seed;
        }
        if (args.count > 0) {
            o.n_per_cluster = args.count;
        }
        fam = synthetic::two_cluster_family(o);
        params = {{"n_per_cluster", o.n_per_cluster}, {"intra_spread", o.intra_spread}, {"inter_gap", o.inter_gap},
                  {"seed", o.seed},                   {"subdivisions", o.subdivisions}};
    } else if (args.family == "perturbation") {
        synthetic::PerturbationOptions o;
        if (args.subdivisions) {
            o.subdivisions = *args.subdivisions;
        }
        if (args.seed) {
            o.seed = *args.seed;
        }
        if (args.count > 0) {
            o.count = args.count;
        }
        fam = synthetic::perturbation_family(o);
        params = {{"count", o.count}, {"amplitude", o.amplitude}, {"seed", o.seed}, {"subdivisions", o.subdivisions}};
    } else {
        throw UsageError("unknown family '" + args.family + "' (sphere-bump, chain, two-cluster, perturbation)");
    }
    std::filesystem::create_directories(args.out_dir);
    json ids = json::array();
    for (const auto& m : fam.meshes) {
        std::ostringstream off;
        write_off(m, off);
        write_atomic(args.out_dir / (m.shape_id + ".off"), off.str());
        ids.push_back(m.shape_id);
    }
    json truth = {{"family", args.family}, {"parameters", params}, {"ids", ids}, {"labels", fam.labels}};
    if (!fam.parameters.empty()) {
        truth["frame_parameters"] = fam.parameters;
    }
    if (!fam.regions.empty()) {
        truth["regions"] = fam.regions;
    }
    if (!fam.partition.cluster_a.empty()) {
        truth["partition"] = {{"cluster_a", fam.partition.cluster_a}, {"cluster_b", fam.partition.cluster_b}};
        write_json(args.out_dir / "partition.json", truth["partition"]);
    }
    if (!fam.pairing.empty()) {
        json pairs = json::array();
        for (const auto& [a, b] : fam.pairing) {
            pairs.push_back({fam.meshes[static_cast<std::size_t>(a)].shape_id,
                             fam.meshes[static_cast<std::size_t>(b)].shape_id});
        }
        truth["pairing"] = pairs;
    }
    write_json(args.out_dir / "truth.json", truth);
    out << "wrote " << fam.meshes.size() << " meshes to " << args.out_dir.string() << "\n";
    return 0;
}

}  // namespace lsd::io
