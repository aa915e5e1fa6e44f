import os
import shutil

from fabric.api import env, lcd, local, puts, task
from fabric.colors import green, yellow
from fabric.context_managers import settings


env.project = 'twingym'
env.report_dir = 'reports'

##
# automated build/test tasks
##


def all_deps():
    '''Locally install all dependencies.'''
    local('pip install -r requirements/dev.txt --exists-action w')
    if os.path.exists('pip-local-req.txt'):
        local('pip install -r pip-local-req.txt --exists-action w')


@task
def test():
    '''Locally run all tests with coverage.'''
    local('coverage run --source=%(project)s manage.py test %(project)s' % env)
    # convert .coverage file to coverage.xml
    local('coverage xml')


@task
def doc():
    '''Locally build documentation.'''
    with lcd('docs'):
        local('make clean html')


@task
def build():
    '''Run a full local build/test cycle.'''
    all_deps()
    test()
    doc()


@task
def check(episodes=100):
    '''Verify both environments, run the mutation matrix and cross-backend
    transfer, then print the summary.  Keeps going after a failed step so the
    summary shows every result.'''
    reports = []
    with settings(warn_only=True):
        for env_id in ('pong', 'cartpole'):
            result = local('python manage.py verify --env %s --episodes %s' %
                           (env_id, episodes))
            reports.append('%s/verify-%s.json' % (env.report_dir, env_id))
            if result.failed:
                puts(yellow('verify failed for %s; transfer refused' % env_id))
                continue
            local('python manage.py transfer --env %s' % env_id)
            reports.append('%s/transfer-%s.json' % (env.report_dir, env_id))
        local('python manage.py verify --mutants')
        reports.append('%s/verify-mutants.json' % env.report_dir)
    existing = [path for path in reports if os.path.exists(path)]
    local('python manage.py report %s --output %s/summary.md' %
          (' '.join(existing), env.report_dir))
    puts(green('Summary written to %s/summary.md' % env.report_dir))


@task
def bench(env_id='pong'):
    '''Run the throughput benchmark for one environment.'''
    local('python manage.py bench --env %s' % env_id)


@task
def clean():
    '''Remove build artifacts and generated reports.'''
    local('rm -rf build dist coverage.xml .coverage')
    if os.path.exists(env.report_dir):
        shutil.rmtree(env.report_dir)
