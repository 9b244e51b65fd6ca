#include "floqflow/mpo.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace floqflow::mpo {

namespace {

Mat spin_op(char which) {
    Mat m(2, 2);
    switch (which) {
        // basis convention matches the dense backend: index 0 has sigma_z = +1
        case 'x': m << 0, 0.5, 0.5, 0; break;
        case 'y': m << 0, cplx(0, -0.5), cplx(0, 0.5), 0; break;
        case 'z': m << 0.5, 0, 0, -0.5; break;
        default: throw std::logic_error("spin_op");
    }
    return m;
}

Mat kron2(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

// Writes a d x d operator into bond entry (a, b) of a site tensor.
void place(Mat& w, int d, int chi_l, int chi_r, int a, int b, const Mat& op) {
    for (int s = 0; s < d; ++s)
        for (int sp = 0; sp < d; ++sp)
            w(s * chi_l + a, sp * chi_r + b) += op(s, sp);
}

MPO uniform_chain(const Mat& w, int d, int chi, int L) {
    MPO m;
    m.d = d;
    m.w.assign(size_t(L), w);
    m.l = Eigen::RowVectorXcd::Zero(chi);
    m.l(0) = 1;
    m.r = Eigen::VectorXcd::Zero(chi);
    m.r(chi - 1) = 1;
    return m;
}

void check_pair(const MPO& a, const MPO& b, const char* who) {
    if (a.length() != b.length() || a.d != b.d)
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

int MPO::max_bond() const {
    int m = 1;
    for (int i = 0; i < length(); ++i) m = std::max({m, chi_l(i), chi_r(i)});
    return m;
}

void MPO::validate() const {
    if (w.empty()) throw std::invalid_argument("MPO: empty chain");
    for (int i = 0; i < length(); ++i) {
        if (w[size_t(i)].rows() % d || w[size_t(i)].cols() % d)
            throw std::invalid_argument("MPO: tensor shape not a multiple of d");
        if (i + 1 < length() && chi_r(i) != chi_l(i + 1))
            throw std::invalid_argument("MPO: bond mismatch between sites");
    }
    if (l.size() != chi_l(0) || r.size() != chi_r(length() - 1))
        throw std::invalid_argument("MPO: boundary vector shape mismatch");
}

void CompressionConfig::validate() const {
    if (!(svd_cutoff > 0 && svd_cutoff < 1))
        throw std::invalid_argument("CompressionConfig: svd_cutoff in (0,1)");
    if (max_bond < 2)
        throw std::invalid_argument("CompressionConfig: max_bond >= 2");
}

// ---------------------------------------------------------------------------
// Templates

MPO ising_mpo(double J, double h_x, double h_z, int L) {
    const Mat sx = spin_op('x'), sz = spin_op('z');
    const Mat one = Mat::Identity(2, 2);
    Mat w = Mat::Zero(6, 6);
    place(w, 2, 3, 3, 0, 0, one);
    place(w, 2, 3, 3, 0, 1, J * sx);
    place(w, 2, 3, 3, 0, 2, h_x * sx + h_z * sz);
    place(w, 2, 3, 3, 1, 2, sx);
    place(w, 2, 3, 3, 2, 2, one);
    return uniform_chain(w, 2, 3, L);
}

MPO exponential_mpo(double J, double zeta, const Eigen::Vector4d& a, const Mat& left_end,
                    const Mat& right_end, const Mat& field, int L) {
    if (zeta <= 0) throw std::invalid_argument("exponential_mpo: zeta > 0");
    const Mat one = Mat::Identity(2, 2);
    const Mat ai = a[0] * one + a[1] * spin_op('x') + a[2] * spin_op('y') +
                   a[3] * spin_op('z');
    Mat w = Mat::Zero(6, 6);
    place(w, 2, 3, 3, 0, 0, one);
    place(w, 2, 3, 3, 0, 1, J * left_end);
    place(w, 2, 3, 3, 0, 2, field);
    place(w, 2, 3, 3, 1, 1, std::exp(-1.0 / zeta) * ai);
    place(w, 2, 3, 3, 1, 2, right_end);
    place(w, 2, 3, 3, 2, 2, one);
    return uniform_chain(w, 2, 3, L);
}

MPO local_sum_mpo(const Mat& op, int L) {
    const int d = int(op.rows());
    const Mat one = Mat::Identity(d, d);
    Mat w = Mat::Zero(2 * d, 2 * d);
    place(w, d, 2, 2, 0, 0, one);
    place(w, d, 2, 2, 0, 1, op);
    place(w, d, 2, 2, 1, 1, one);
    return uniform_chain(w, d, 2, L);
}

MPO local_site_mpo(const Mat& op, int site, int L, int d) {
    if (site < 0 || site >= L) throw std::invalid_argument("local_site_mpo: site");
    MPO m;
    m.d = d;
    const Mat one = Mat::Identity(d, d);
    for (int i = 0; i < L; ++i) {
        Mat w = Mat::Zero(d, d);
        place(w, d, 1, 1, 0, 0, i == site ? op : one);
        m.w.push_back(std::move(w));
    }
    m.l = Eigen::RowVectorXcd::Ones(1);
    m.r = Eigen::VectorXcd::Ones(1);
    return m;
}

MPO product_probe_mpo(const std::vector<Mat>& factors, int first_site, int L, int d) {
    if (first_site < 0 || first_site + int(factors.size()) > L)
        throw std::invalid_argument("product_probe_mpo: window out of range");
    MPO m;
    m.d = d;
    const Mat one = Mat::Identity(d, d);
    for (int i = 0; i < L; ++i) {
        const int k = i - first_site;
        const Mat& op =
            (k >= 0 && k < int(factors.size())) ? factors[size_t(k)] : one;
        Mat w = Mat::Zero(d, d);
        place(w, d, 1, 1, 0, 0, op);
        m.w.push_back(std::move(w));
    }
    m.l = Eigen::RowVectorXcd::Ones(1);
    m.r = Eigen::VectorXcd::Ones(1);
    return m;
}

MPO exponential_hubbard_mpo(double t_h, double L_hop, double u_coeff, int L) {
    if (L_hop <= 0) throw std::invalid_argument("exponential_hubbard_mpo: L_hop > 0");
    // local modes ordered (up, dn): basis index s = up + 2 dn; index 0 empty
    Mat av(2, 2), ad(2, 2), zf(2, 2), nf(2, 2);
    av << 0, 1, 0, 0;   // annihilation
    ad << 0, 0, 1, 0;   // creation
    zf << 1, 0, 0, -1;  // parity
    nf << 0, 0, 0, 1;   // number
    const Mat one2 = Mat::Identity(2, 2);
    // Jordan-Wigner hopping channels: left op, middle parity, right op
    const Mat l_up_f = kron2(zf, ad), r_up_f = kron2(one2, av);
    const Mat l_up_b = kron2(zf, av), r_up_b = kron2(one2, ad);
    const Mat l_dn_f = kron2(ad, one2), r_dn_f = kron2(av, zf);
    const Mat l_dn_b = kron2(av, one2), r_dn_b = kron2(ad, zf);
    const Mat z_tot = kron2(zf, zf);
    const Mat n_updn = kron2(nf, nf);
    const Mat one4 = Mat::Identity(4, 4);
    const double decay = std::exp(-1.0 / L_hop);

    Mat w = Mat::Zero(4 * 6, 4 * 6);
    place(w, 4, 6, 6, 0, 0, one4);
    place(w, 4, 6, 6, 0, 1, t_h * l_up_f);
    place(w, 4, 6, 6, 0, 2, t_h * l_up_b);
    place(w, 4, 6, 6, 0, 3, t_h * l_dn_f);
    place(w, 4, 6, 6, 0, 4, t_h * l_dn_b);
    place(w, 4, 6, 6, 0, 5, u_coeff * n_updn);
    for (int c = 1; c <= 4; ++c) place(w, 4, 6, 6, c, c, decay * z_tot);
    place(w, 4, 6, 6, 1, 5, r_up_f);
    place(w, 4, 6, 6, 2, 5, r_up_b);
    place(w, 4, 6, 6, 3, 5, r_dn_f);
    place(w, 4, 6, 6, 4, 5, r_dn_b);
    place(w, 4, 6, 6, 5, 5, one4);
    return uniform_chain(w, 4, 6, L);
}

MPO zero_mpo(int L, int d) {
    MPO m;
    m.d = d;
    for (int i = 0; i < L; ++i) m.w.push_back(Mat::Zero(d, d));
    m.l = Eigen::RowVectorXcd::Ones(1);
    m.r = Eigen::VectorXcd::Ones(1);
    m.l(0) = 0;  // scale lives on the boundary
    return m;
}

MPO identity_mpo(int L, int d) {
    MPO m = zero_mpo(L, d);
    m.l(0) = 1;
    for (auto& w : m.w) w = Mat::Identity(d, d);
    return m;
}

// ---------------------------------------------------------------------------
// Algebra

MPO mpo_add(const MPO& a, const MPO& b) {
    check_pair(a, b, "mpo_add");
    MPO c;
    c.d = a.d;
    const int L = a.length();
    for (int i = 0; i < L; ++i) {
        const int cl = a.chi_l(i) + b.chi_l(i), cr = a.chi_r(i) + b.chi_r(i);
        Mat w = Mat::Zero(a.d * cl, a.d * cr);
        for (int s = 0; s < a.d; ++s)
            for (int sp = 0; sp < a.d; ++sp) {
                w.block(s * cl, sp * cr, a.chi_l(i), a.chi_r(i)) = a.slab(i, s, sp);
                w.block(s * cl + a.chi_l(i), sp * cr + a.chi_r(i), b.chi_l(i),
                        b.chi_r(i)) = b.slab(i, s, sp);
            }
        c.w.push_back(std::move(w));
    }
    c.l = Eigen::RowVectorXcd(a.l.size() + b.l.size());
    c.l << a.l, b.l;
    c.r = Eigen::VectorXcd(a.r.size() + b.r.size());
    c.r << a.r, b.r;
    return c;
}

void mpo_scale(MPO& a, cplx c) { a.l *= c; }

MPO mpo_adjoint(const MPO& a) {
    MPO c;
    c.d = a.d;
    for (int i = 0; i < a.length(); ++i) {
        const int cl = a.chi_l(i), cr = a.chi_r(i);
        Mat w(a.d * cl, a.d * cr);
        for (int s = 0; s < a.d; ++s)
            for (int sp = 0; sp < a.d; ++sp)
                w.block(s * cl, sp * cr, cl, cr) = a.slab(i, sp, s).conjugate();
        c.w.push_back(std::move(w));
    }
    c.l = a.l.conjugate();
    c.r = a.r.conjugate();
    return c;
}

cplx mpo_inner(const MPO& a, const MPO& b) {
    check_pair(a, b, "mpo_inner");
    Mat v = a.l.adjoint() * b.l;  // chi_a x chi_b
    for (int i = 0; i < a.length(); ++i) {
        Mat vn = Mat::Zero(a.chi_r(i), b.chi_r(i));
        for (int s = 0; s < a.d; ++s)
            for (int sp = 0; sp < a.d; ++sp)
                vn.noalias() += a.slab(i, s, sp).adjoint() * v * b.slab(i, s, sp);
        v = vn / double(a.d);  // running tr / d^L normalization
    }
    return (a.r.adjoint() * v * b.r).value();
}

double mpo_intensive_norm(const MPO& a) {
    return std::sqrt(std::max(0.0, mpo_inner(a, a).real() / a.length()));
}

dense::Mat to_dense(const MPO& a) {
    std::int64_t dim = 1;
    for (int i = 0; i < a.length(); ++i) dim *= a.d;
    if (dim > dense::kDenseDimCap)
        throw std::invalid_argument("mpo::to_dense: dense dimension cap exceeded");
    // acc[b]: dense operator of the processed prefix for bond value b
    std::vector<Mat> acc(size_t(a.l.size()));
    for (Eigen::Index b = 0; b < a.l.size(); ++b)
        acc[size_t(b)] = a.l(b) * Mat::Ones(1, 1);
    for (int i = 0; i < a.length(); ++i) {
        std::vector<Mat> nxt(size_t(a.chi_r(i)));
        const auto sub = acc[0].rows();
        for (int b = 0; b < a.chi_r(i); ++b)
            nxt[size_t(b)] = Mat::Zero(sub * a.d, sub * a.d);
        for (int s = 0; s < a.d; ++s)
            for (int sp = 0; sp < a.d; ++sp) {
                const auto sl = a.slab(i, s, sp);
                for (int al = 0; al < a.chi_l(i); ++al)
                    for (int b = 0; b < a.chi_r(i); ++b)
                        if (sl(al, b) != cplx{0, 0})
                            nxt[size_t(b)].block(s * sub, sp * sub, sub, sub) +=
                                sl(al, b) * acc[size_t(al)];
            }
        acc = std::move(nxt);
    }
    Mat out = Mat::Zero(dim, dim);
    for (Eigen::Index b = 0; b < a.r.size(); ++b) out += a.r(b) * acc[size_t(b)];
    return out;
}

// ---------------------------------------------------------------------------
// Compression

namespace {

// Pulls the boundary vectors into the edge tensors (chi -> 1 at both ends).
MPO absorb_boundaries(const MPO& a) {
    MPO c = a;
    const int L = c.length();
    {
        const int cl = c.chi_l(0), cr = c.chi_r(0);
        Mat w(c.d, c.d * cr);
        for (int s = 0; s < c.d; ++s)
            for (int sp = 0; sp < c.d; ++sp)
                w.block(s, sp * cr, 1, cr) = c.l * c.slab(0, s, sp);
        c.w[0] = std::move(w);
        c.l = Eigen::RowVectorXcd::Ones(1);
    }
    {
        const int i = L - 1;
        const int cl = c.chi_l(i);
        Mat w(c.d * cl, c.d);
        for (int s = 0; s < c.d; ++s)
            for (int sp = 0; sp < c.d; ++sp)
                w.block(s * cl, sp, cl, 1) = c.slab(i, s, sp) * c.r;
        c.w[size_t(i)] = std::move(w);
        c.r = Eigen::VectorXcd::Ones(1);
    }
    return c;
}

// (chi_l, s, sp) x chi_r matricization used by the left-to-right sweep.
Mat fuse_left(const MPO& a, int i) {
    const int cl = a.chi_l(i), cr = a.chi_r(i);
    Mat m(a.d * a.d * cl, cr);
    for (int s = 0; s < a.d; ++s)
        for (int sp = 0; sp < a.d; ++sp)
            m.block((s * a.d + sp) * cl, 0, cl, cr) = a.slab(i, s, sp);
    return m;
}

Mat unfuse_left(const Mat& m, int d, int cl) {
    const int cr = int(m.cols());
    Mat w(d * cl, d * cr);
    for (int s = 0; s < d; ++s)
        for (int sp = 0; sp < d; ++sp)
            w.block(s * cl, sp * cr, cl, cr) = m.block((s * d + sp) * cl, 0, cl, cr);
    return w;
}

// chi_l x (s, sp, chi_r) matricization used by the right-to-left sweep.
Mat fuse_right(const MPO& a, int i) {
    const int cl = a.chi_l(i), cr = a.chi_r(i);
    Mat m(cl, a.d * a.d * cr);
    for (int s = 0; s < a.d; ++s)
        for (int sp = 0; sp < a.d; ++sp)
            m.block(0, (s * a.d + sp) * cr, cl, cr) = a.slab(i, s, sp);
    return m;
}

Mat unfuse_right(const Mat& m, int d, int cr) {
    const int cl = int(m.rows());
    Mat w(d * cl, d * cr);
    for (int s = 0; s < d; ++s)
        for (int sp = 0; sp < d; ++sp)
            w.block(s * cl, sp * cr, cl, cr) = m.block(0, (s * d + sp) * cr, cl, cr);
    return w;
}

// Truncated SVD keep count against relative discarded weight.
int keep_count(const Eigen::VectorXd& sv, double cutoff, int cap) {
    const double total2 = sv.squaredNorm();
    if (total2 == 0) return 1;
    int k = int(sv.size());
    double tail2 = 0;
    while (k > 1) {
        const double s2 = sv(k - 1) * sv(k - 1);
        if (tail2 + s2 > cutoff * cutoff * total2) break;
        tail2 += s2;
        --k;
    }
    return std::min(k, cap);
}

}  // namespace

MPO mpo_compress(const MPO& a, const CompressionConfig& cfg,
                 CompressionReport* report) {
    cfg.validate();
    MPO c = absorb_boundaries(a);
    const int L = c.length();
    // left-to-right QR gauge sweep
    for (int i = 0; i + 1 < L; ++i) {
        const Mat m = fuse_left(c, i);
        Eigen::HouseholderQR<Mat> qr(m);
        const int k = int(std::min(m.rows(), m.cols()));
        const Mat q = qr.householderQ() * Mat::Identity(m.rows(), k);
        const Mat rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        c.w[size_t(i)] = unfuse_left(q, c.d, c.chi_l(i));
        // push R into the next tensor from the left
        const int cl = c.chi_l(i + 1), cr = c.chi_r(i + 1);
        Mat wn(c.d * k, c.d * cr);
        for (int s = 0; s < c.d; ++s)
            wn.block(s * k, 0, k, c.d * cr).noalias() =
                rr * c.w[size_t(i + 1)].block(s * cl, 0, cl, c.d * cr);
        c.w[size_t(i + 1)] = std::move(wn);
    }
    // right-to-left SVD truncation sweep
    double dw2 = 0;
    bool reached = true;
    for (int i = L - 1; i > 0; --i) {
        const Mat m = fuse_right(c, i);
        Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const int k = keep_count(sv, cfg.svd_cutoff, cfg.max_bond);
        const double total2 = sv.squaredNorm();
        if (total2 > 0) {
            const double tail2 = sv.tail(sv.size() - k).squaredNorm();
            dw2 += tail2 / total2;
            if (tail2 > cfg.svd_cutoff * cfg.svd_cutoff * total2 * (1 + 1e-12))
                reached = false;
        }
        c.w[size_t(i)] = unfuse_right(svd.matrixV().leftCols(k).adjoint(), c.d,
                                      c.chi_r(i));
        const Mat carry =
            svd.matrixU().leftCols(k) * sv.head(k).asDiagonal();  // chi_l x k
        const int cl = c.chi_l(i - 1);
        Mat wp(c.d * cl, c.d * k);
        for (int sp = 0; sp < c.d; ++sp)
            wp.block(0, sp * k, c.d * cl, k).noalias() =
                c.w[size_t(i - 1)].block(0, sp * c.chi_r(i - 1), c.d * cl,
                                         c.chi_r(i - 1)) *
                carry;
        c.w[size_t(i - 1)] = std::move(wp);
    }
    if (report) {
        report->discarded_weight = std::sqrt(dw2);
        report->target_reached = reached;
    }
    return c;
}

MPO mpo_product(const MPO& a, const MPO& b, const CompressionConfig& cfg,
                CompressionReport* report) {
    check_pair(a, b, "mpo_product");
    cfg.validate();
    const int L = a.length(), d = a.d;
    const int cap = cfg.zip_cap();
    MPO c;
    c.d = d;
    c.w.resize(size_t(L));
    // carry: chi_c x (chi_a * chi_b), starts from the fused left boundaries
    Mat carry(1, a.l.size() * b.l.size());
    for (Eigen::Index i = 0; i < a.l.size(); ++i)
        for (Eigen::Index j = 0; j < b.l.size(); ++j)
            carry(0, i * b.l.size() + j) = a.l(i) * b.l(j);
    double dw2 = 0;
    bool reached = true;
    for (int i = 0; i < L; ++i) {
        const int cal = a.chi_l(i), car = a.chi_r(i);
        const int cbl = b.chi_l(i), cbr = b.chi_r(i);
        const int cc = int(carry.rows());
        // T rows (s, spp, c), cols (a_r, b_r)
        Mat t = Mat::Zero(d * d * cc, car * cbr);
        Mat mc(cal, cbl);
        for (int row = 0; row < cc; ++row) {
            for (int al = 0; al < cal; ++al)
                for (int bl = 0; bl < cbl; ++bl)
                    mc(al, bl) = carry(row, al * cbl + bl);
            for (int s = 0; s < d; ++s)
                for (int spp = 0; spp < d; ++spp) {
                    Mat acc = Mat::Zero(car, cbr);
                    for (int sp = 0; sp < d; ++sp)
                        acc.noalias() += a.slab(i, s, sp).transpose() * mc *
                                         b.slab(i, sp, spp);
                    // row-major (a_r, b_r) flattening of acc
                    for (int ar = 0; ar < car; ++ar)
                        for (int br = 0; br < cbr; ++br)
                            t((s * d + spp) * cc + row, ar * cbr + br) =
                                acc(ar, br);
                }
        }
        if (i + 1 == L) {
            // absorb the fused right boundary
            Eigen::VectorXcd rr(car * cbr);
            for (int ar = 0; ar < car; ++ar)
                for (int br = 0; br < cbr; ++br)
                    rr(ar * cbr + br) = a.r(ar) * b.r(br);
            Mat w(d * cc, d);
            for (int s = 0; s < d; ++s)
                for (int spp = 0; spp < d; ++spp)
                    w.block(s * cc, spp, cc, 1) =
                        t.block((s * d + spp) * cc, 0, cc, car * cbr) * rr;
            c.w[size_t(i)] = std::move(w);
            break;
        }
        Eigen::BDCSVD<Mat> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const int k = keep_count(sv, cfg.svd_cutoff, cap);
        const double total2 = sv.squaredNorm();
        if (total2 > 0) {
            const double tail2 = sv.tail(sv.size() - k).squaredNorm();
            dw2 += tail2 / total2;
            if (tail2 > cfg.svd_cutoff * cfg.svd_cutoff * total2 * (1 + 1e-12))
                reached = false;
        }
        Mat w(d * cc, d * k);
        const Mat u = svd.matrixU().leftCols(k);
        for (int s = 0; s < d; ++s)
            for (int spp = 0; spp < d; ++spp)
                w.block(s * cc, spp * k, cc, k) =
                    u.block((s * d + spp) * cc, 0, cc, k);
        c.w[size_t(i)] = std::move(w);
        carry = sv.head(k).asDiagonal() * svd.matrixV().leftCols(k).adjoint();
    }
    c.l = Eigen::RowVectorXcd::Ones(1);
    c.r = Eigen::VectorXcd::Ones(1);
    if (report) {
        report->discarded_weight = std::sqrt(dw2);
        report->target_reached = reached;
    }
    return c;
}

MPO mpo_commutator(const MPO& a, const MPO& b, const CompressionConfig& cfg,
                   CompressionReport* report) {
    CompressionReport r1, r2, r3;
    MPO ab = mpo_product(a, b, cfg, &r1);
    MPO ba = mpo_product(b, a, cfg, &r2);
    mpo_scale(ba, -1.0);
    MPO c = mpo_compress(mpo_add(ab, ba), cfg, &r3);
    if (report) {
        report->discarded_weight = std::sqrt(r1.discarded_weight * r1.discarded_weight +
                                             r2.discarded_weight * r2.discarded_weight +
                                             r3.discarded_weight * r3.discarded_weight);
        report->target_reached =
            r1.target_reached && r2.target_reached && r3.target_reached;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr std::uint64_t kMagic = 0x4f504d4651464cull;  // "FLFQMPO"
constexpr std::uint32_t kVersion = 1;

void write_mat(std::ofstream& out, const Mat& m) {
    const std::int64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double re = m(i, j).real(), im = m(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
}

Mat read_mat(std::ifstream& in) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in || rows < 0 || cols < 0 || rows * cols > (std::int64_t(1) << 28))
        throw std::runtime_error("mpo::import_binary: corrupt tensor header");
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double re, im;
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            m(i, j) = cplx{re, im};
        }
    return m;
}
}  // namespace

void export_binary(const MPO& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("mpo::export_binary: cannot open " + path);
    out.write(reinterpret_cast<const char*>(&kMagic), 8);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    const std::int32_t L = a.length(), d = a.d;
    out.write(reinterpret_cast<const char*>(&L), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    for (auto& w : a.w) write_mat(out, w);
    write_mat(out, a.l);
    write_mat(out, a.r);
}

MPO import_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("mpo::import_binary: cannot open " + path);
    std::uint64_t magic = 0;
    std::uint32_t version = 0;
    std::int32_t L = 0, d = 0;
    in.read(reinterpret_cast<char*>(&magic), 8);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&L), 4);
    in.read(reinterpret_cast<char*>(&d), 4);
    if (magic != kMagic || version != kVersion)
        throw std::runtime_error("mpo::import_binary: bad magic or version");
    MPO a;
    a.d = d;
    for (int i = 0; i < L; ++i) a.w.push_back(read_mat(in));
    a.l = read_mat(in);
    a.r = read_mat(in);
    a.validate();
    return a;
}

// ---------------------------------------------------------------------------
// Flow drivers

flow::FlowTrajectory<MPO> mpo_flow(const flow::Harmonic<MPO>& initial,
                                   const CompressionConfig& compression,
                                   flow::StepperConfig cfg) {
    Backend b(initial.h.at(0).length(), compression);
    cfg.scheme = flow::Scheme::rk4_fixed;
    cfg.resource_ceiling =
        std::min(cfg.resource_ceiling, compression.max_bond - 0.5);
    flow::FlowState<Backend> state;
    state.h = initial;
    return flow::integrate_flow(b, state, cfg);
}

flow::FlowTrajectory<MPO> mpo_observable_flow(const flow::Harmonic<MPO>& initial,
                                              const MPO& obs, int m_obs,
                                              const CompressionConfig& compression,
                                              flow::StepperConfig cfg) {
    Backend b(initial.h.at(0).length(), compression);
    cfg.scheme = flow::Scheme::rk4_fixed;
    cfg.resource_ceiling =
        std::min(cfg.resource_ceiling, compression.max_bond - 0.5);
    flow::FlowState<Backend> state;
    state.h = initial;
    state.obs.push_back(obs);
    for (int m = 1; m <= m_obs; ++m)
        state.obs.push_back(zero_mpo(obs.length(), obs.d));
    return flow::integrate_flow(b, state, cfg);
}

// ---------------------------------------------------------------------------
// Locality diagnostics

std::vector<double> probe_coefficients(const MPO& h, int max_width) {
    if (h.d != 2)
        throw std::invalid_argument("probe_coefficients: spin chains only");
    const Mat sx = spin_op('x');
    const Mat pup = 0.5 * Mat::Identity(2, 2) + spin_op('z');
    std::vector<double> out;
    for (int n = 2; n <= max_width; ++n) {
        std::vector<Mat> factors(size_t(n), pup);
        factors.front() = sx;
        factors.back() = sx;
        const int first = (h.length() - n) / 2;
        if (first < 0) break;
        const MPO probe = product_probe_mpo(factors, first, h.length(), 2);
        const double p2 = mpo_inner(probe, probe).real();
        out.push_back(mpo_inner(probe, h).real() / p2);
    }
    return out;
}

LocalityDiagnostic spreading_profile(const flow::FlowTrajectory<MPO>& traj,
                                     int max_width, double coeff_floor) {
    if (traj.snapshots.empty())
        throw std::invalid_argument("spreading_profile: no snapshots retained");
    LocalityDiagnostic out;
    for (auto& snap : traj.snapshots) {
        const auto coeffs = probe_coefficients(snap.h.h[0], max_width);
        std::vector<double> ns(coeffs.size());
        for (size_t i = 0; i < coeffs.size(); ++i) ns[i] = double(i + 2);
        const auto fit = fits::exponential_tail_fit(ns, coeffs, coeff_floor);
        if (!fit.ok) continue;
        out.lambdas.push_back(snap.lambda);
        out.zeta.push_back(fit.zeta);
        out.fit_r2.push_back(fit.r2);
    }
    // lambda_c from the growing tail past the zeta minimum
    if (out.zeta.size() >= 3) {
        const auto imin = size_t(std::min_element(out.zeta.begin(), out.zeta.end()) -
                                 out.zeta.begin());
        if (out.zeta.size() - imin >= 3) {
            std::vector<double> ls(out.lambdas.begin() + long(imin), out.lambdas.end());
            std::vector<double> zs(out.zeta.begin() + long(imin), out.zeta.end());
            out.critical = fits::critical_lambda_fit(ls, zs);
        }
    }
    return out;
}

std::vector<double> observable_site_profile(const MPO& o, const Mat& probe) {
    std::vector<double> out;
    const double p2 = probe.squaredNorm() / double(probe.rows());
    for (int i = 0; i < o.length(); ++i) {
        const MPO p = local_site_mpo(probe, i, o.length(), o.d);
        out.push_back(std::abs(mpo_inner(p, o)) / p2);
    }
    return out;
}

}  // namespace floqflow::mpo
