#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "dwg/diffusion.hpp"
#include "dwg/fixtures.hpp"
#include "dwg/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitInputError = 2;

dwg::InitMode parse_init(const std::string& s) {
  if (s == "random") return dwg::InitMode::Random;
  if (s == "pca") return dwg::InitMode::Pca;
  if (s == "gauss") return dwg::InitMode::GaussMap;
  throw CLI::ValidationError("--init", "expected random|pca|gauss");
}

dwg::AreaMode parse_area(const std::string& s) {
  if (s == "uniform") return dwg::AreaMode::Uniform;
  if (s == "voronoi") return dwg::AreaMode::Voronoi;
  throw CLI::ValidationError("--area", "expected uniform|voronoi");
}

struct ReconstructArgs {
  std::string input, output, normals_out, diagnostics;
  int depth = 8;
  double lambda = 10.0;
  std::string init = "random";
  std::string area = "voronoi";
  std::uint64_t seed = 1;
  int max_iters = 200;
  double eps_deg = 0.1;
  int threads = 0;
};

int run_reconstruct(const ReconstructArgs& args) {
  dwg::PointCloud raw = dwg::read_point_cloud(args.input);
  auto [cloud, transform] = dwg::normalize_cloud(raw);

  dwg::DwgConfig cfg;
  cfg.depth = args.depth;
  cfg.lambda = args.lambda;
  cfg.init_mode = parse_init(args.init);
  cfg.area_mode = parse_area(args.area);
  cfg.seed = dwg::RngSeed{args.seed};
  cfg.max_iterations = args.max_iters;
  cfg.epsilon_deg = args.eps_deg;
  cfg.threads = args.threads;

  std::ofstream diag_file;
  std::ostream* diag = nullptr;
  if (!args.diagnostics.empty()) {
    diag_file.open(args.diagnostics);
    if (!diag_file) throw dwg::DwgError("cannot write " + args.diagnostics);
    diag = &diag_file;
  }

  const dwg::DwgResult result = dwg::run_dwg(cloud, cfg, &transform, diag);
  dwg::write_mesh(result.mesh, args.output);
  if (!args.normals_out.empty())
    dwg::write_oriented_points(result.cloud, args.normals_out);

  std::cerr << "reconstruct: " << result.iterations << " iterations, "
            << result.mesh.face_count() << " faces"
            << (result.converged ? "" : " (not converged)") << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

struct GwnArgs {
  std::string cloud_path, query_path, output;
  double lambda = 0.0;
  bool brute = false;
  std::string area = "uniform";
  int depth = 8;
  int threads = 0;
};

int run_gwn(const GwnArgs& args) {
  dwg::PointCloud raw = dwg::read_point_cloud(args.cloud_path);
  if (!raw.has_normals())
    throw dwg::DwgError(args.cloud_path + ": winding numbers need input normals");
  const dwg::PointCloud queries_raw = dwg::read_point_cloud(args.query_path);

  auto [cloud, transform] = dwg::normalize_cloud(raw);
  const dwg::KnnIndex knn(cloud.points);
  cloud.areas = dwg::compute_area_weights(cloud, knn, 15, parse_area(args.area));

  dwg::KernelConfig kernel;
  kernel.lambda = args.lambda;
  kernel.delta = dwg::compute_deltas(cloud, knn, kernel);

  std::vector<dwg::Vec3> queries(queries_raw.points.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    queries[i] = transform.to_normalized(queries_raw.points[i]);

  std::vector<double> values(queries.size());
  if (args.brute) {
    dwg::parallel_for(queries.size(), args.threads, [&](std::size_t i) {
      values[i] = dwg::gwn_brute(cloud, queries[i], kernel);
    });
  } else {
    const dwg::WindingOctree tree = dwg::build_octree(cloud, args.depth);
    const dwg::WindingField field =
        dwg::evaluate_field(tree, cloud, queries, kernel, args.threads);
    values = field.values;
  }

  std::ofstream out(args.output);
  if (!out) throw dwg::DwgError("cannot write " + args.output);
  out.precision(17);
  out << "x,y,z,w\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const dwg::Vec3& q = queries_raw.points[i];
    out << q.x << "," << q.y << "," << q.z << "," << values[i] << "\n";
  }
  return kExitOk;
}

struct CorruptArgs {
  std::string input, output;
  double noise = 0.0;
  double outliers = 0.0;
  std::uint64_t seed = 1;
};

int run_corrupt(const CorruptArgs& args) {
  dwg::PointCloud cloud = dwg::read_point_cloud(args.input);
  cloud = dwg::add_gaussian_noise(cloud, args.noise, dwg::RngSeed{args.seed});
  cloud = dwg::add_outliers(cloud, args.outliers, dwg::RngSeed{args.seed});
  cloud.normals.clear();  // corrupted positions invalidate input normals
  cloud.areas.clear();
  dwg::write_point_cloud(cloud, args.output);
  return kExitOk;
}

struct EvalArgs {
  std::string mesh_path, reference;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

std::vector<dwg::Vec3> reference_samples(const std::string& reference, std::size_t n,
                                         dwg::RngSeed seed) {
  if (reference.rfind("analytic:", 0) == 0) {
    std::stringstream ss(reference.substr(9));
    std::string shape;
    std::getline(ss, shape, ':');
    if (shape == "sphere") {
      double radius = 1.0;
      std::string tok;
      if (std::getline(ss, tok, ':')) radius = std::stod(tok);
      return dwg::sample_sphere_surface(n, radius, seed);
    }
    if (shape == "torus") {
      std::string r1, r2;
      if (!std::getline(ss, r1, ':') || !std::getline(ss, r2, ':'))
        throw dwg::DwgError("analytic:torus needs R and r, e.g. analytic:torus:0.3:0.12");
      return dwg::sample_torus_surface(n, std::stod(r1), std::stod(r2), seed);
    }
    throw dwg::DwgError("unknown analytic reference '" + shape + "'");
  }
  const dwg::TriangleMesh mesh = dwg::read_mesh(reference);
  return dwg::sample_mesh_surface(mesh, n, seed);
}

int run_eval(const EvalArgs& args) {
  const dwg::TriangleMesh mesh = dwg::read_mesh(args.mesh_path);
  if (mesh.faces.empty()) throw dwg::DwgError(args.mesh_path + ": empty mesh");
  const auto mesh_samples =
      dwg::sample_mesh_surface(mesh, args.samples, dwg::RngSeed{args.seed});
  const auto ref_samples =
      reference_samples(args.reference, args.samples, dwg::RngSeed{args.seed ^ 0x517cc1b7ull});
  const double cd = dwg::chamfer_distance(mesh_samples, ref_samples);
  std::cout.precision(10);
  std::cout << "chamfer " << cd << "\n";
  std::cout << "chamfer_x1000 " << cd * 1000.0 << "\n";
  return kExitOk;
}

struct FixtureArgs {
  std::string shape, output;
  std::size_t n = 10000;
  double radius = 1.0;
  double ring_radius = 0.3, tube_radius = 0.12;
  double width = 1.0, height = 1.0, thickness = 0.02;
  std::uint64_t seed = 1;
};

int run_fixture(const FixtureArgs& args) {
  dwg::PointCloud cloud;
  const dwg::RngSeed seed{args.seed};
  if (args.shape == "sphere") {
    cloud = dwg::sample_sphere(args.n, args.radius, seed);
  } else if (args.shape == "torus") {
    cloud = dwg::sample_torus(args.n, args.ring_radius, args.tube_radius, seed);
  } else if (args.shape == "plate") {
    cloud = dwg::sample_thin_plate(args.n, args.width, args.height, args.thickness, seed);
  } else {
    throw CLI::ValidationError("shape", "expected sphere|torus|plate");
  }
  dwg::write_point_cloud(cloud, args.output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface reconstruction from unoriented point clouds by "
               "iterative winding-number gradient diffusion"};
  app.require_subcommand(1);

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand(
      "reconstruct", "reconstruct a watertight mesh and oriented normals");
  reconstruct->add_option("input", rec.input, "input point cloud (xyz/ply/obj)")->required();
  reconstruct->add_option("-o,--output", rec.output, "output mesh (ply/obj)")->required();
  reconstruct->add_option("--normals-out", rec.normals_out, "oriented points output (ply)");
  reconstruct->add_option("--depth", rec.depth, "octree depth");
  reconstruct->add_option("--lambda", rec.lambda, "screening coefficient");
  reconstruct->add_option("--init", rec.init, "normal init: random|pca|gauss");
  reconstruct->add_option("--area", rec.area, "area weights: uniform|voronoi");
  reconstruct->add_option("--seed", rec.seed, "random seed");
  reconstruct->add_option("--max-iters", rec.max_iters, "iteration cap");
  reconstruct->add_option("--eps-deg", rec.eps_deg, "convergence threshold (degrees)");
  reconstruct->add_option("--threads", rec.threads, "worker threads (0 = hardware)");
  reconstruct->add_option("--diagnostics", rec.diagnostics, "per-iteration JSON lines file");

  GwnArgs gwn;
  auto* gwn_cmd = app.add_subcommand("gwn", "probe the winding-number field");
  gwn_cmd->add_option("cloud", gwn.cloud_path, "oriented point cloud")->required();
  gwn_cmd->add_option("--query", gwn.query_path, "query points (xyz)")->required();
  gwn_cmd->add_option("-o,--output", gwn.output, "output csv")->required();
  gwn_cmd->add_option("--lambda", gwn.lambda, "screening coefficient");
  gwn_cmd->add_flag("--brute", gwn.brute, "exact summation instead of the octree");
  gwn_cmd->add_option("--area", gwn.area, "area weights: uniform|voronoi");
  gwn_cmd->add_option("--depth", gwn.depth, "octree depth for the fast path");
  gwn_cmd->add_option("--threads", gwn.threads, "worker threads");

  CorruptArgs cor;
  auto* corrupt = app.add_subcommand("corrupt", "add noise and outliers to a cloud");
  corrupt->add_option("input", cor.input, "input point cloud")->required();
  corrupt->add_option("-o,--output", cor.output, "output point cloud")->required();
  corrupt->add_option("--noise", cor.noise, "gaussian sigma, percent of bbox diagonal");
  corrupt->add_option("--outliers", cor.outliers, "outliers to add, percent of point count");
  corrupt->add_option("--seed", cor.seed, "random seed");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Chamfer distance of a mesh against a reference");
  eval->add_option("--mesh", ev.mesh_path, "mesh to evaluate")->required();
  eval->add_option("--reference", ev.reference,
                   "reference mesh path, analytic:sphere:R or analytic:torus:R:r")->required();
  eval->add_option("--samples", ev.samples, "surface samples per side");
  eval->add_option("--seed", ev.seed, "sampling seed");

  FixtureArgs fix;
  auto* fixture = app.add_subcommand("fixture", "generate an analytic test cloud");
  fixture->add_option("shape", fix.shape, "sphere|torus|plate")->required();
  fixture->add_option("-o,--output", fix.output, "output point cloud")->required();
  fixture->add_option("-n,--count", fix.n, "number of points");
  fixture->add_option("--radius", fix.radius, "sphere radius");
  fixture->add_option("--ring-radius", fix.ring_radius, "torus ring radius R");
  fixture->add_option("--tube-radius", fix.tube_radius, "torus tube radius r");
  fixture->add_option("--width", fix.width, "plate width");
  fixture->add_option("--height", fix.height, "plate height");
  fixture->add_option("--thickness", fix.thickness, "plate thickness");
  fixture->add_option("--seed", fix.seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*reconstruct) return run_reconstruct(rec);
    if (*gwn_cmd) return run_gwn(gwn);
    if (*corrupt) return run_corrupt(cor);
    if (*eval) return run_eval(ev);
    if (*fixture) return run_fixture(fix);
  } catch (const dwg::DwgError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
