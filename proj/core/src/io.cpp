#include "singlet/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace singlet {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return {buf.data(), end};
}

void write_state_csv(std::ostream& out, const SpinStateVector& state) {
  state.validate();
  out << "# N=" << state.basis->atoms() << '\n';
  out << "# order=" << SpinEnsembleBasis::order_tag() << '\n';
  out << "n_minus,n_zero,n_plus,re,im\n";
  for (std::size_t i = 0; i < state.basis->dimension(); ++i) {
    const auto& occ = state.basis->state(i);
    const Complex a = state.amplitudes[static_cast<Eigen::Index>(i)];
    out << occ.minus << ',' << occ.zero << ',' << occ.plus << ',' << format_double(a.real()) << ','
        << format_double(a.imag()) << '\n';
  }
}

SpinStateVector read_state_csv(std::istream& in) {
  std::string line;
  int atoms = -1;
  std::string order;
  while (std::getline(in, line) && line.rfind('#', 0) == 0) {
    if (line.rfind("# N=", 0) == 0) atoms = std::stoi(line.substr(4));
    if (line.rfind("# order=", 0) == 0) order = line.substr(8);
  }
  if (atoms < 1) throw std::invalid_argument("state file lacks a valid '# N=' header");
  if (order != SpinEnsembleBasis::order_tag()) {
    throw std::invalid_argument("state file basis order '" + order + "' is not supported");
  }
  if (line != "n_minus,n_zero,n_plus,re,im") throw std::invalid_argument("state file has an unexpected column header");
  SpinStateVector s;
  s.basis = build_basis(atoms);
  s.amplitudes = ComplexVector::Zero(static_cast<Eigen::Index>(s.basis->dimension()));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Occupation occ;
    double re = 0.0;
    double im = 0.0;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    if (!(row >> occ.minus >> c1 >> occ.zero >> c2 >> occ.plus >> c3 >> re >> c4 >> im)) {
      throw std::invalid_argument("malformed state row: " + line);
    }
    s.amplitudes[static_cast<Eigen::Index>(s.basis->index_of(occ))] = Complex(re, im);
  }
  s.normalized = std::abs(s.amplitudes.squaredNorm() - 1.0) <= 1e-10;
  return s;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  out << "traj_id,t,S2,singlet_overlap,n_jumps,norm\n";
  for (const auto& r : records) {
    for (const auto& s : r.samples) {
      out << r.index << ',' << format_double(s.time) << ',' << format_double(s.s2) << ','
          << format_double(s.singlet_overlap) << ',' << s.jumps << ',' << format_double(s.norm) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  out << "traj_id,seed,n_jumps,final_S2,final_overlap\n";
  for (const auto& r : records) {
    const double nan = std::nan("");
    const double s2 = r.samples.empty() ? nan : r.final_sample().s2;
    const double ov = r.samples.empty() ? nan : r.final_sample().singlet_overlap;
    out << r.index << ',' << r.seed << ',' << r.jumps.size() << ',' << format_double(s2) << ','
        << format_double(ov) << '\n';
  }
}

void write_average_csv(std::ostream& out, const EnsembleAverage& average, const std::vector<std::string>& names) {
  out << "t,S2,S2_stderr,singlet_overlap,n_jumps";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < average.time.size(); ++i) {
    out << format_double(average.time[i]) << ',' << format_double(average.s2[i]) << ','
        << format_double(average.s2_stderr[i]) << ',' << format_double(average.singlet_overlap[i]) << ','
        << format_double(average.jumps[i]);
    for (std::size_t o = 0; o < names.size() && o < average.observables.size(); ++o) {
      out << ',' << format_double(average.observables[o][i]);
    }
    out << '\n';
  }
}

void write_scan_csv(std::ostream& out, const ScanResult& scan) {
  out << "q0,xi,Gamma_over_Lambda,N,p_s,overlap,p\n";
  const double nan = std::nan("");
  for (const auto& p : scan.points) {
    out << format_double(p.q0) << ',' << format_double(p.xi) << ',' << format_double(scan.spec.decay_ratio) << ','
        << scan.spec.atoms << ',' << format_double(p.ok ? p.survival : nan) << ','
        << format_double(p.ok ? p.singlet_overlap : nan) << ',' << format_double(p.ok ? p.efficiency : nan) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& histogram) {
  out << "bin_center,count\n";
  for (std::size_t i = 0; i < histogram.centers.size(); ++i) {
    out << format_double(histogram.centers[i]) << ',' << histogram.counts[i] << '\n';
  }
}

void write_decomposition_csv(std::ostream& out, const std::vector<DickeComponent>& decomposition) {
  out << "k,S2_eigenvalue,d_k_squared\n";
  for (const auto& c : decomposition) {
    out << c.k << ',' << format_double(c.s2_eigenvalue) << ',' << format_double(c.weight) << '\n';
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

}  // namespace singlet
