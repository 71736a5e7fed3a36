"""
Simulation concurrency control using a Redis-based semaphore
"""
import redis
import time
import logging
from django.conf import settings
from contextlib import contextmanager

logger = logging.getLogger(__name__)

# Atomic acquire: add the member only while the set is below capacity.
# Returns 1 if the slot was acquired, 0 if the set is already full.
_ACQUIRE_LUA = """
local key = KEYS[1]
local job_id = ARGV[1]
local max = tonumber(ARGV[2])
local ttl = tonumber(ARGV[3])
if redis.call('scard', key) < max then
    redis.call('sadd', key, job_id)
    redis.call('expire', key, ttl)
    return 1
end
return 0
"""


class SimulationSlotLimiter:
    """
    Caps the number of Monte Carlo runs executing at once.

    Slots are members of a Redis set; the Lua script makes check-and-add atomic.
    """

    def __init__(self, max_concurrent=None, redis_client=None, poll_interval=2):
        """
        Initialize the limiter

        Args:
            max_concurrent: Maximum number of concurrent simulations (default from settings)
            redis_client: Redis client; built from REDIS_URL when omitted
            poll_interval: Seconds between acquire attempts
        """
        self.max_concurrent = max_concurrent or settings.PROPEST.get('MAX_CONCURRENT_SIMULATIONS', 2)
        self.redis_client = redis_client or redis.from_url(settings.REDIS_URL)
        self.semaphore_key = 'propest:simulation:semaphore'
        self.lock_timeout = settings.PROPEST.get('RESULT_TIMEOUT', 3600) * 2
        self.poll_interval = poll_interval
        self._acquire_script = self.redis_client.register_script(_ACQUIRE_LUA)

    def _try(self, job_id) -> bool:
        return bool(self._acquire_script(
            keys=[self.semaphore_key],
            args=[job_id, self.max_concurrent, self.lock_timeout],
        ))

    @contextmanager
    def acquire(self, job_id, timeout=None):
        """
        Acquire a simulation slot, waiting if needed

        Args:
            job_id: Unique identifier of the run (the Celery task id)
            timeout: How long to wait for a slot (seconds). None = wait forever

        Yields:
            True once acquired; raises TimeoutError when the wait runs out
        """
        acquired = False
        start_time = time.time()

        try:
            while not self._try(job_id):
                if timeout is not None and time.time() - start_time >= timeout:
                    raise TimeoutError(
                        f"Could not acquire a simulation slot after {timeout}s "
                        f"(max concurrent simulations: {self.max_concurrent})"
                    )
                time.sleep(self.poll_interval)

            acquired = True
            logger.info(f"Simulation {job_id} acquired slot ({self.get_active_count()}/{self.max_concurrent})")
            yield True
        finally:
            if acquired and self.redis_client.srem(self.semaphore_key, job_id):
                logger.info(f"Simulation {job_id} released slot ({self.get_active_count()}/{self.max_concurrent})")

    def get_active_jobs(self):
        """Currently running simulation ids"""
        return [
            member.decode('utf-8') if isinstance(member, bytes) else member
            for member in self.redis_client.smembers(self.semaphore_key)
        ]

    def get_active_count(self):
        return self.redis_client.scard(self.semaphore_key)

    def clear_all(self):
        """Drop every slot"""
        return self.redis_client.delete(self.semaphore_key)


# Global instance
limiter = SimulationSlotLimiter()
