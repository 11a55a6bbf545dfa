import pytest
import torch
import torch.nn.functional as F

from futureplan.planner import MotionLayerNorm, Planner

from conftest import randomize_zero_init

C, M, T = 16, 6, 8


def make(**kw):
    return Planner(C, M, T, bev_tokens=8, heads=4, **kw).eval()


@pytest.fixture
def data():
    g = torch.Generator().manual_seed(1)
    return (torch.randn(2, M, C, generator=g), torch.randn(2, 8, 8, C, generator=g),
            torch.randn(2, M, 8, 8, C, generator=g), torch.randn(M, T, 2, generator=g) * 5)


def test_attend_current(data):
    p = make()
    ego, bev, _, _ = data
    out = p.attend_current(ego, bev)
    assert out.shape == (2, M, C)
    perm = torch.randperm(M)
    assert torch.allclose(p.attend_current(ego[:, perm], bev), out[:, perm], atol=1e-6)
    bev0 = bev.clone()
    bev0[:, 3, 3] = 0
    changed = (p.attend_current(ego, bev0) - out).abs().amax(-1)
    assert torch.all(changed > 1e-7)


def test_init_future_ego(data):
    p = make()
    anchors = data[3]
    q = p.init_future_ego(anchors, 2)
    assert q.shape == (2, M, C)
    swapped = anchors.clone()
    swapped[[1, 4]] = anchors[[4, 1]]
    assert torch.allclose(p.init_future_ego(swapped, 2)[:, [1, 4]], q[:, [4, 1]])
    same = anchors.clone()
    same[:, -1] = torch.tensor([7.0, 1.0])
    q2 = p.init_future_ego(same, 1)
    assert torch.allclose(q2, q2[:, :1].expand_as(q2))


def test_attend_future_routing(data):
    p = make()
    _, _, fb, anchors = data
    q = p.init_future_ego(anchors, 2)
    out = p.attend_future(q, fb)
    assert out.shape == (2, M, C)
    fb0 = fb.clone()
    fb0[:, 2] = 0
    out0 = p.attend_future(q, fb0)
    assert (out0[:, 2] - out[:, 2]).abs().max() > 0
    assert torch.equal(out0[:, [0, 1, 3, 4, 5]], out[:, [0, 1, 3, 4, 5]])
    dup_q, dup_fb = q.clone(), fb.clone()
    dup_q[:, 5], dup_fb[:, 5] = q[:, 0], fb[:, 0]
    dup = p.attend_future(dup_q, dup_fb)
    assert torch.allclose(dup[:, 5], dup[:, 0], atol=1e-6)


def test_mln_identity_and_scale_invariance():
    mln = MotionLayerNorm(C)
    x, cond = torch.randn(3, M, C), torch.randn(3, M, C)
    ln = F.layer_norm(x, (C,), eps=mln.norm.eps)
    assert torch.allclose(mln(x, cond), ln, atol=1e-6)
    assert torch.allclose(mln(3 * x, cond), ln, atol=1e-6)
    randomize_zero_init(mln)
    perm = torch.randperm(M)
    assert torch.allclose(mln(x[:, perm], cond[:, perm]), mln(x, cond)[:, perm], atol=1e-6)


def test_init_trajectories_equal_anchors(data):
    ego, bev, fb, anchors = data
    plan = make()(ego, bev, fb, anchors)
    for t in (plan.traj_a, plan.traj_b, plan.traj_final):
        assert t.shape == (2, M, T, 2)
        assert (t - anchors).abs().max() <= 1e-7
    assert plan.mode_logits.shape == (2, M)


@pytest.mark.parametrize("fusion", ["mln", "cat", "add"])
def test_plan_step_equivariance(data, fusion):
    p = randomize_zero_init(make(fusion=fusion))
    ego, bev, fb, anchors = data
    out = p(ego, bev, fb, anchors)
    perm = torch.randperm(M)
    outp = p(ego[:, perm], bev, fb[:, perm], anchors[perm])
    for name in ("traj_a", "traj_b", "traj_final", "mode_logits", "fused_ego"):
        assert torch.allclose(getattr(outp, name), getattr(out, name)[:, perm], atol=1e-5), name


def test_score_reads_current_branch(data):
    p = randomize_zero_init(make())
    ego, bev, fb, anchors = data
    a = p(ego, bev, fb, anchors).mode_logits
    b = p(ego, bev, torch.randn_like(fb), anchors).mode_logits
    assert torch.equal(a, b)


def test_no_future_bev_bypasses_branch(data):
    p = randomize_zero_init(make(future_bev=False))
    ego, bev, fb, anchors = data
    out = p(ego, bev, fb, anchors)
    expected = p.decode_traj(p.head_final, p.attend_current(ego, bev), anchors)
    assert torch.equal(out.traj_final, expected)
    assert out.traj_b is None
    assert not any(n.startswith(("future", "head_b", "fusion")) for n, _ in p.named_parameters())
    assert torch.equal(p(ego, bev, torch.randn_like(fb), anchors).traj_final, out.traj_final)


def test_decoupling_current_gradients_match(data):
    """Current-branch gradients do not depend on whether the future branch exists."""
    ego, bev, fb, anchors = data
    gt = torch.randn(2, T, 2)
    full = randomize_zero_init(make())
    bare = make(future_bev=False)
    bare.load_state_dict({k: v for k, v in full.state_dict().items() if k in bare.state_dict()})
    grads = []
    for p in (full, bare):
        p.zero_grad()
        out = p(ego, bev, fb, anchors)
        (F.l1_loss(out.traj_a[:, 0], gt) + F.cross_entropy(out.mode_logits, torch.tensor([1, 2]))).backward()
        grads.append({n: q.grad.clone() for n, q in p.named_parameters() if q.grad is not None})
    assert grads[0].keys() == grads[1].keys()
    for n in grads[1]:
        assert torch.equal(grads[0][n], grads[1][n]), n


def test_joint_variant_runs(data):
    p = randomize_zero_init(make(decoupled=False))
    ego, bev, fb, anchors = data
    out = p(ego, bev, fb, anchors)
    assert out.traj_final.shape == (2, M, T, 2) and out.traj_a is None
    fb0 = fb.clone()
    fb0[:, 1] = 0
    changed = (p(ego, bev, fb0, anchors).traj_final - out.traj_final).abs().amax((-1, -2))
    assert changed[:, 1].min() > 0 and changed[:, [0, 2, 3, 4, 5]].max() == 0


@pytest.mark.parametrize("init", ["trajectory", "random"])
def test_future_init_variants(data, init):
    p = make(future_init=init)
    ego, bev, fb, anchors = data
    assert p.init_future_ego(anchors, 2).shape == (2, M, C)
    assert (p(ego, bev, fb, anchors).traj_b - anchors).abs().max() <= 1e-7


def test_shared_ego_decoder_flag():
    p = make(shared_ego_decoder=True)
    assert p.head_a is p.head_b is p.head_final
